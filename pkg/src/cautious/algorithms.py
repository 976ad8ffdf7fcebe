"""Cautious reasoning with under/overestimates streamed as they improve.

Four procedures refine the estimates until they meet:

* ``enumeration``: block each stable model found and intersect it into O.
* ``overestimate-reduction``: require a model that drops some atom of O.
* ``ict``: test one candidate at a time by forcing it false.
* ``ipct``: like ``ict`` but gives up on a candidate at each restart.

Starred variants additionally harvest atoms entailed at decision level 0
after every restart, so U grows even before a search completes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from .completion import ClauseSet, complete
from .engine import (
    Interrupted,
    SolveOutcome,
    Solver,
    SolverConfig,
    Status,
    compute_stable_model_star,
)
from .preprocess import SimplificationReport, simplify
from .program import Program


class Procedure(Enum):
    ENUMERATION = "enum"
    OVERESTIMATE_REDUCTION = "ored"
    ICT = "ict"
    IPCT = "ipct"


_LABELS = {
    Procedure.ENUMERATION: "A1",
    Procedure.OVERESTIMATE_REDUCTION: "A2",
    Procedure.ICT: "A3",
    Procedure.IPCT: "A4",
}


@dataclass(frozen=True)
class AlgorithmId:
    kind: Procedure
    starred: bool = False

    @property
    def label(self) -> str:
        return _LABELS[self.kind] + ("*" if self.starred else "")

    @property
    def anytime(self) -> bool:
        """Whether U may grow before the final step."""
        return self.starred or self.kind in (Procedure.ICT, Procedure.IPCT)

    @classmethod
    def parse(cls, text: str) -> AlgorithmId:
        """Accepts ``A1``..``A4`` or procedure names, with an optional ``*``."""
        starred = text.endswith("*")
        key = text.rstrip("*")
        for proc, label in _LABELS.items():
            if key in (label, proc.value):
                return cls(proc, starred)
        raise ValueError(f"unknown algorithm {text!r}")


ALL_ALGORITHMS = tuple(AlgorithmId(p, s) for s in (False, True) for p in Procedure)


class EventKind(Enum):
    UNDER_ADD = "underestimate-add"
    OVER_REMOVE = "overestimate-remove"
    COMPLETE = "complete"
    INCOHERENT = "incoherent"


@dataclass(frozen=True)
class EstimateEvent:
    kind: EventKind
    atom: int | None
    t_ms: int
    origin: str | None = None


Sink = Callable[[EstimateEvent], None]


@dataclass
class CautiousResult:
    status: str  # "complete", "incoherent" or "partial"
    under: frozenset[int]
    over: frozenset[int]
    stats: dict = field(default_factory=dict)

    @property
    def answer(self) -> frozenset[int] | None:
        """The cautious consequences in Q, or None for an incoherent program."""
        if self.status == "incoherent":
            return None
        return self.under


def one_of(candidates: Iterable[int], mode: str = "first", solver: Solver | None = None) -> int:
    """Pick the next candidate: lowest id, or highest activity (ties to lowest id)."""
    cands = sorted(candidates)
    if not cands:
        raise ValueError("one_of needs a non-empty candidate set")
    if mode == "first" or solver is None:
        return cands[0]
    if mode != "max-activity":
        raise ValueError(f"unknown selection mode {mode!r}")
    act = solver.activity
    return max(cands, key=lambda a: (act[a], -a))


def prepare(program: Program, query, *, simplify_first: bool = True) -> tuple[ClauseSet, SimplificationReport]:
    cs = complete(program)
    if not simplify_first:
        return cs, SimplificationReport()
    return simplify(cs, query, program)


class CautiousReasoner:
    """One run of the cautious reasoning loop over a single engine.

    The hooks ``sync`` (called at iteration boundaries and level-0 points)
    and ``on_coherent`` exist for the parallel orchestrator.
    """

    def __init__(
        self,
        program: Program,
        query,
        algorithm: AlgorithmId,
        sink: Sink | None = None,
        *,
        seed: int = 0,
        restart_base: int | None = 32,
        simplify: bool = True,
        cancel=None,
        conflict_budget: int | None = None,
        selection: str | None = None,
        prepared: tuple[ClauseSet, SimplificationReport] | None = None,
        origin: str | None = None,
        clock_start: float | None = None,
    ):
        self.program = program
        self.query = program.query_atoms() if query is None else frozenset(query)
        self.algorithm = algorithm
        self.sink = sink
        self.origin = origin
        self.selection = selection or "max-activity"
        self.start = time.monotonic() if clock_start is None else clock_start
        self.cs, self.report = prepared or prepare(program, self.query, simplify_first=simplify)
        self.config = SolverConfig(restart_base=restart_base, seed=seed, conflict_budget=conflict_budget)
        self.solver = Solver(program, self.cs, self.config, cancel=cancel)
        self.eliminated = self.cs.eliminated_vars()
        self.under: set[int] = set()
        self.over: set[int] = set(self.query)
        self.sync: Callable[[CautiousReasoner], None] | None = None
        self.on_coherent: Callable[[CautiousReasoner], None] | None = None
        self.iterations = 0

    # ------------------------------------------------------------ estimates

    def _now(self) -> int:
        return int((time.monotonic() - self.start) * 1000)

    def _emit(self, kind: EventKind, atom: int | None = None) -> None:
        if self.sink is not None:
            self.sink(EstimateEvent(kind, atom, self._now(), self.origin))

    def add_under(self, atoms: Iterable[int]) -> None:
        for a in sorted(atoms):
            if a in self.under:
                continue
            if a not in self.over:
                raise AssertionError(f"atom {a} proven cautious after leaving the overestimate")
            self.under.add(a)
            self._emit(EventKind.UNDER_ADD, a)

    def remove_over(self, atoms: Iterable[int]) -> None:
        for a in sorted(atoms):
            if a not in self.over:
                continue
            if a in self.under:
                raise AssertionError(f"atom {a} refuted after entering the underestimate")
            self.over.discard(a)
            self._emit(EventKind.OVER_REMOVE, a)

    def intersect(self, model: frozenset[int]) -> None:
        self.remove_over(self.over - model)

    def harvest(self) -> None:
        """Move candidates entailed at level 0 into U."""
        self.add_under((self.over - self.under) & self.solver.level0_true())

    def _sync(self) -> None:
        if self.sync is not None:
            self.sync(self)

    # ------------------------------------------------------------ search

    def _search(self, assume: int | None) -> SolveOutcome:
        if not self.algorithm.starred:
            self._sync()
            return self.solver.solve(assume)

        def before_segment() -> None:
            self._sync()
            self.harvest()

        return compute_stable_model_star(self.solver, assume, before_segment)

    def _pick(self) -> int:
        return one_of(self.over - self.under, self.selection, self.solver)

    def _step_enumeration(self, model: frozenset[int]) -> frozenset[int]:
        self.solver.add_constraint([-a for a in sorted(model - self.eliminated)])
        res = self._search(None)
        if res.is_model:
            self.intersect(res.model)
            return res.model
        self.add_under(self.over)
        return model

    def _step_overestimate_reduction(self) -> None:
        group = self.solver.add_constraint([-a for a in sorted(self.over - self.under)], removable=True)
        res = self._search(None)
        self.solver.remove_group(group)
        if res.is_model:
            self.intersect(res.model)
        else:
            self.add_under(self.over)

    def _step_ict(self) -> None:
        a = self._pick()
        res = self._search(a)
        if res.is_model:
            self.intersect(res.model)
        else:
            self.add_under([a])

    def _step_ipct(self) -> None:
        self._sync()
        if self.algorithm.starred:
            self.harvest()
            if self.under == self.over:
                return
        a = self._pick()
        res = self.solver.solve(a, until_restart=True)
        if res.status is Status.UNSAT:
            self.add_under([a])
        elif res.is_model:
            self.intersect(res.model)

    def run(self, *, coherence_test: bool = True, preprocessing_events: bool = True) -> CautiousResult:
        try:
            if self.report.incoherent:
                return self._finish("incoherent")
            if preprocessing_events:
                self.remove_over(self.report.fixed_false & self.query)
                if self.algorithm.anytime:
                    self.add_under(self.report.fixed_true & self.query)
            model = frozenset()
            if coherence_test:
                res = self._search(None)
                if not res.is_model:
                    return self._finish("incoherent")
                model = res.model
                self.intersect(model)
                if self.on_coherent is not None:
                    self.on_coherent(self)
            kind = self.algorithm.kind
            while self.under != self.over:
                self.iterations += 1
                if kind is Procedure.ENUMERATION:
                    model = self._step_enumeration(model)
                elif kind is Procedure.OVERESTIMATE_REDUCTION:
                    self._step_overestimate_reduction()
                elif kind is Procedure.ICT:
                    self._step_ict()
                else:
                    self._step_ipct()
                self._sync()
            return self._finish("complete")
        except Interrupted:
            return self._finish("partial")

    def _finish(self, status: str) -> CautiousResult:
        if status == "complete":
            self._emit(EventKind.COMPLETE)
        elif status == "incoherent":
            self._emit(EventKind.INCOHERENT)
        stats = dict(vars(self.solver.stats))
        stats["iterations"] = self.iterations
        return CautiousResult(status, frozenset(self.under), frozenset(self.over), stats)


def cautious_reasoning(
    program: Program,
    query=None,
    algorithm: AlgorithmId | str = AlgorithmId(Procedure.IPCT, True),
    sink: Sink | None = None,
    **options,
) -> CautiousResult:
    """Compute the atoms of ``query`` true in every stable model of ``program``.

    Events stream to ``sink`` as the estimates improve.  Interruption (via
    ``cancel`` or ``conflict_budget``) yields status ``"partial"`` with
    sound estimates.
    """
    if isinstance(algorithm, str):
        algorithm = AlgorithmId.parse(algorithm)
    return CautiousReasoner(program, query, algorithm, sink, **options).run()
