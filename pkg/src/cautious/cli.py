"""Command-line front end with a line-oriented streaming protocol.

Output lines::

    c <text>          comment
    u <atom>          atom joins the underestimate
    o <atom>          atom leaves the overestimate
    s COMPLETE | INCOHERENT | PARTIAL
"""

from __future__ import annotations

import argparse
import csv
import signal
import sys
import threading
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .algorithms import (
    AlgorithmId,
    CautiousReasoner,
    EstimateEvent,
    EventKind,
    Procedure,
)
from .ingest import ParseError, SourceFormat, detect_format, parse, parse_query
from .multi import run_multi
from .oracle import OracleBoundError, enumerate_stable_models
from .program import Program

EXIT_COMPLETE = 10
EXIT_INCOHERENT = 20
EXIT_PARTIAL = 30
EXIT_USAGE = 64
EXIT_PARSE = 65
EXIT_IO = 66

_EXIT = {"complete": EXIT_COMPLETE, "incoherent": EXIT_INCOHERENT, "partial": EXIT_PARTIAL}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    input: str
    format: SourceFormat | None
    query: str | None
    algorithm: AlgorithmId | None  # None selects multi mode
    timeout_s: float | None
    seed: int
    restart_base: int
    trace: str | None
    simplify: bool = True
    verbose: bool = False
    oracle: bool = False


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cautious", description="Anytime computation of cautious consequences.")
    p.add_argument("input", help="ground program (ASP text) or DIMACS CNF; '-' reads stdin")
    p.add_argument("--algorithm", choices=[x.value for x in Procedure], default=None)
    p.add_argument("--starred", action="store_true", help="harvest level-0 atoms at every restart")
    p.add_argument("--multi", action="store_true", help="run A2* and A4* in parallel")
    p.add_argument("--query", metavar="FILE", help="one atom per line (default: every atom)")
    p.add_argument("--format", choices=["asp", "dimacs", "auto"], default="auto")
    p.add_argument("--timeout", type=float, metavar="SECS")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restart-base", type=int, default=32, help="Luby unit; 0 disables restarts")
    p.add_argument("--trace", metavar="FILE", help="write a t_ms,under_count,over_count CSV")
    p.add_argument("--no-simplify", action="store_true", help="skip preprocessing")
    p.add_argument("--verbose", action="store_true", help="print comment lines with statistics")
    p.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    return p


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if ns.multi and (ns.algorithm is not None or ns.starred):
        raise UsageError("--multi cannot be combined with --algorithm or --starred")
    if ns.timeout is not None and ns.timeout < 1:
        raise UsageError("--timeout must be at least 1 second")
    if ns.restart_base < 0:
        raise UsageError("--restart-base must be non-negative")
    if ns.multi:
        alg = None
    elif ns.algorithm is None:
        alg = AlgorithmId(Procedure.IPCT, True)
    else:
        alg = AlgorithmId(Procedure(ns.algorithm), ns.starred)
    return RunConfig(
        input=ns.input,
        format=None if ns.format == "auto" else SourceFormat(ns.format),
        query=ns.query,
        algorithm=alg,
        timeout_s=ns.timeout,
        seed=ns.seed,
        restart_base=ns.restart_base,
        trace=ns.trace,
        simplify=not ns.no_simplify,
        verbose=ns.verbose,
        oracle=ns.oracle,
    )


def emit_trace(events: Iterable[EstimateEvent], query_size: int, out: IO[str]) -> None:
    """Write the running sizes of U and O, one row per estimate change."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t_ms", "under_count", "over_count"])
    under, over, last = 0, query_size, 0
    w.writerow([0, under, over])
    for ev in events:
        if ev.kind is EventKind.UNDER_ADD:
            under += 1
        elif ev.kind is EventKind.OVER_REMOVE:
            over -= 1
        else:
            continue
        last = max(last, ev.t_ms)
        w.writerow([last, under, over])


class _Printer:
    def __init__(self, program: Program, out: IO[str], show_origin: bool):
        self.program = program
        self.out = out
        self.show_origin = show_origin
        self.events: list[EstimateEvent] = []
        self.lock = threading.Lock()

    def line(self, text: str) -> None:
        with self.lock:
            self.out.write(text + "\n")
            self.out.flush()

    def __call__(self, ev: EstimateEvent) -> None:
        self.events.append(ev)
        if ev.kind is EventKind.UNDER_ADD:
            tag = "u"
        elif ev.kind is EventKind.OVER_REMOVE:
            tag = "o"
        else:
            return
        if self.show_origin:
            self.line(f"c origin {ev.origin or 'coordinator'}")
        self.line(f"{tag} {self.program.name(ev.atom)}")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _run_oracle(program: Program, query, out: IO[str]) -> int:
    res = enumerate_stable_models(program)
    for m in res.stable_models:
        out.write("c model " + " ".join(program.names(m)) + "\n")
    if not res.coherent:
        out.write("s INCOHERENT\n")
        return EXIT_INCOHERENT
    for name in program.names(res.answer(query)):
        out.write(f"u {name}\n")
    out.write("s COMPLETE\n")
    return EXIT_COMPLETE


def _install_cancel(cancel: threading.Event, timeout: float | None):
    timer = None
    if timeout is not None:
        timer = threading.Timer(timeout, cancel.set)
        timer.daemon = True
        timer.start()
    previous = {}
    if threading.current_thread() is threading.main_thread():
        for sig in (signal.SIGINT, signal.SIGTERM):
            previous[sig] = signal.signal(sig, lambda *_: cancel.set())

    def restore():
        if timer is not None:
            timer.cancel()
        for sig, handler in previous.items():
            signal.signal(sig, handler)

    return restore


def run(cfg: RunConfig, out: IO[str], err: IO[str]) -> int:
    try:
        text = _read(cfg.input)
        qtext = _read(cfg.query) if cfg.query else None
    except OSError as e:
        err.write(f"cautious: {e}\n")
        return EXIT_IO
    try:
        fmt = cfg.format or detect_format(text)
        program = parse(text, fmt)
        query = parse_query(qtext, program) if qtext is not None else program.query_atoms()
    except ParseError as e:
        err.write(f"cautious: parse error at {e}\n")
        return EXIT_PARSE

    if cfg.oracle:
        try:
            return _run_oracle(program, query, out)
        except OracleBoundError as e:
            err.write(f"cautious: {e}\n")
            return EXIT_USAGE

    printer = _Printer(program, out, show_origin=cfg.algorithm is None)
    cancel = threading.Event()
    restore = _install_cancel(cancel, cfg.timeout_s)
    restart_base = cfg.restart_base or None
    try:
        if cfg.algorithm is None:
            result = run_multi(
                program, query, printer,
                seed=cfg.seed, restart_base=restart_base, simplify=cfg.simplify, cancel=cancel,
            )
        else:
            result = CautiousReasoner(
                program, query, cfg.algorithm, printer,
                seed=cfg.seed, restart_base=restart_base, simplify=cfg.simplify, cancel=cancel,
            ).run()
    finally:
        restore()

    if cfg.verbose:
        for key, value in sorted(result.stats.items()):
            printer.line(f"c {key} {value}")
    printer.line(f"s {result.status.upper()}")
    if cfg.trace:
        try:
            with open(cfg.trace, "w", encoding="utf-8") as fh:
                emit_trace(printer.events, len(query), fh)
        except OSError as e:
            err.write(f"cautious: {e}\n")
            return EXIT_IO
    return _EXIT[result.status]


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as e:
        sys.stderr.write(f"cautious: {e}\n")
        return EXIT_USAGE
    return run(cfg, sys.stdout, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
