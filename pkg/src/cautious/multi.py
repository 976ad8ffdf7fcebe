"""Two cooperating workers (A2* and A4*) sharing estimates and short clauses.

Workers run in threads and never share mutable state; every exchange goes
through queues.  The coordinator is the only writer to the outward sink.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass
from typing import Iterable

from .algorithms import (
    AlgorithmId,
    CautiousReasoner,
    CautiousResult,
    EstimateEvent,
    EventKind,
    Procedure,
    Sink,
    prepare,
)
from .program import Program

W1 = "A2*"
W2 = "A4*"


@dataclass(frozen=True)
class ExchangeMessage:
    kind: str  # "under-add", "over-remove" or "short-clause"
    payload: object
    origin: str

    def __post_init__(self):
        if self.kind == "short-clause" and len(self.payload) > 2:
            raise ValueError("only clauses of length at most two are exchanged")


@dataclass
class MergedEstimates:
    under: set[int]
    over: set[int]


class _Worker:
    def __init__(self, name, reasoner: CautiousReasoner, outbox: queue.Queue, cancel: threading.Event, stall: bool):
        self.name = name
        self.reasoner = reasoner
        self.outbox = outbox
        self.cancel = cancel
        self.stall = stall
        self.inbox: queue.Queue[ExchangeMessage] = queue.Queue()
        self.thread: threading.Thread | None = None
        reasoner.sync = self._drain
        reasoner.solver.on_learn = self._export

    def _export(self, lits) -> None:
        self.outbox.put((self.name, ExchangeMessage("short-clause", tuple(lits), self.name)))

    def _drain(self, reasoner: CautiousReasoner) -> None:
        while True:
            try:
                msg = self.inbox.get_nowait()
            except queue.Empty:
                break
            if msg.kind == "under-add":
                reasoner.add_under([msg.payload])
            elif msg.kind == "over-remove":
                reasoner.remove_over([msg.payload])
            else:
                reasoner.solver.import_clause(msg.payload)

    def start(self, **run_args) -> None:
        def body():
            try:
                if self.stall:
                    self._stalled(**run_args)
                    return
                res = self.reasoner.run(**run_args)
                self.outbox.put((self.name, ("done", res)))
            except BaseException as exc:  # a crashed worker must not take the run down
                self.outbox.put((self.name, ("crash", exc)))

        self.thread = threading.Thread(target=body, name=f"cautious-{self.name}", daemon=True)
        self.thread.start()

    def _stalled(self, coherence_test: bool, **_):
        if coherence_test:
            # still announce coherence so the partner can start
            res = self.reasoner._search(None)
            if not res.is_model:
                self.outbox.put((self.name, ("done", self.reasoner._finish("incoherent"))))
                return
            self.reasoner.intersect(res.model)
            self.reasoner.on_coherent(self.reasoner)
        self.cancel.wait()
        self.outbox.put((self.name, ("done", self.reasoner._finish("partial"))))


def run_multi(
    program: Program,
    query=None,
    sink: Sink | None = None,
    *,
    seed: int = 0,
    restart_base: int | None = 32,
    simplify: bool = True,
    cancel: threading.Event | None = None,
    conflict_budget: int | None = None,
    stall: Iterable[str] = (),
    poll: float = 0.05,
) -> CautiousResult:
    """Run A2* and A4* side by side and merge their estimates.

    A2* performs the coherence test; A4* starts from its first model.
    ``stall`` names workers that stop after their first step (test hook).
    """
    if query is None:
        query = program.query_atoms()
    query = frozenset(query)
    start = time.monotonic()
    prepared = prepare(program, query, simplify_first=simplify)
    cs, report = prepared
    outbox: queue.Queue = queue.Queue()
    stall = set(stall)
    merged = MergedEstimates(set(), set(query))
    cancels = {W1: threading.Event(), W2: threading.Event()}
    workers: dict[str, _Worker] = {}
    alive: set[str] = set()

    def emit(kind, atom=None, origin=None):
        if sink is not None:
            sink(EstimateEvent(kind, atom, int((time.monotonic() - start) * 1000), origin))

    def make(name, alg) -> _Worker:
        r = CautiousReasoner(
            program, query, alg, None,
            seed=seed, restart_base=restart_base, cancel=cancels[name],
            conflict_budget=conflict_budget, prepared=prepared, origin=name, clock_start=start,
        )
        r.sink = lambda ev, name=name: outbox.put((name, ev))
        w = _Worker(name, r, outbox, cancels[name], name in stall)
        workers[name] = w
        return w

    def spawn_w2(coherence_test: bool) -> None:
        w = make(W2, AlgorithmId(Procedure.IPCT, True))
        w.reasoner.under = set(merged.under)
        w.reasoner.over = set(merged.over)
        alive.add(W2)
        w.start(coherence_test=coherence_test, preprocessing_events=False)

    def stats() -> dict:
        return {name: dict(vars(w.reasoner.solver.stats)) for name, w in workers.items()}

    def finish(status: str, under=None, over=None) -> CautiousResult:
        for ev in cancels.values():
            ev.set()
        for w in workers.values():
            if w.thread is not None:
                w.thread.join(timeout=5)
        if status == "complete":
            final = set(under)
            for a in sorted(final - merged.under):
                merged.under.add(a)
                emit(EventKind.UNDER_ADD, a)
            for a in sorted(merged.over - final):
                merged.over.discard(a)
                emit(EventKind.OVER_REMOVE, a)
            emit(EventKind.COMPLETE)
        elif status == "incoherent":
            emit(EventKind.INCOHERENT)
        return CautiousResult(status, frozenset(merged.under), frozenset(merged.over), stats())

    if report.incoherent:
        return finish("incoherent")
    for a in sorted(report.fixed_false & query):
        merged.over.discard(a)
        emit(EventKind.OVER_REMOVE, a, "preprocess")
    for a in sorted(report.fixed_true & query):
        merged.under.add(a)
        emit(EventKind.UNDER_ADD, a, "preprocess")

    w1 = make(W1, AlgorithmId(Procedure.OVERESTIMATE_REDUCTION, True))
    w1.reasoner.under = set(merged.under)
    w1.reasoner.over = set(merged.over)
    coherent = threading.Event()  # only touched by the coordinator
    w1.reasoner.on_coherent = lambda r: outbox.put((W1, ("coherent", None)))
    alive.add(W1)
    w1.start(coherence_test=True, preprocessing_events=False)

    while True:
        if cancel is not None and cancel.is_set():
            return finish("partial")
        try:
            origin, msg = outbox.get(timeout=poll)
        except queue.Empty:
            continue
        other = W2 if origin == W1 else W1
        if isinstance(msg, EstimateEvent):
            if msg.kind is EventKind.UNDER_ADD and msg.atom not in merged.under:
                merged.under.add(msg.atom)
                emit(msg.kind, msg.atom, origin)
                if other in workers:
                    workers[other].inbox.put(ExchangeMessage("under-add", msg.atom, origin))
            elif msg.kind is EventKind.OVER_REMOVE and msg.atom in merged.over:
                merged.over.discard(msg.atom)
                emit(msg.kind, msg.atom, origin)
                if other in workers:
                    workers[other].inbox.put(ExchangeMessage("over-remove", msg.atom, origin))
            if coherent.is_set() and merged.under == merged.over:
                return finish("complete", merged.under)
        elif isinstance(msg, ExchangeMessage):
            if other in workers:
                workers[other].inbox.put(msg)
        else:
            tag, value = msg
            if tag == "coherent":
                coherent.set()
                if merged.under == merged.over:
                    return finish("complete", merged.under)
                spawn_w2(coherence_test=False)
            elif tag == "done":
                alive.discard(origin)
                if value.status == "incoherent":
                    return finish("incoherent")
                if value.status == "complete":
                    return finish("complete", value.under)
                if not alive:
                    return finish("partial")
            elif tag == "crash":
                alive.discard(origin)
                if origin == W1 and not coherent.is_set() and W2 not in workers:
                    spawn_w2(coherence_test=True)
                    coherent.set()  # W2 now owns the coherence test
                    continue
                if not alive:
                    return finish("partial")
