"""Shared generators and checks for the test-suite."""

from __future__ import annotations

import io
import random
from pathlib import Path

from cautious.algorithms import EventKind
from cautious.cli import parse_config, run
from cautious.ingest import parse_asp, parse_dimacs, parse_query
from cautious.program import AtomTable, Program, Rule

FIXTURES = Path(__file__).parent / "fixtures"


def example1() -> Program:
    return parse_asp((FIXTURES / "example1.lp").read_text())


def example1_query(program: Program) -> frozenset[int]:
    return parse_query((FIXTURES / "example1_q.txt").read_text(), program)


def random_program(rng: random.Random, max_atoms: int = 12, max_rules: int = 25, tight: bool | None = None) -> Program:
    """A random ground normal program.

    With ``tight=True`` positive bodies only mention atoms with a larger id
    than the head, which rules out positive cycles.
    """
    n = rng.randint(1, max_atoms)
    table = AtomTable(f"p{i}" for i in range(1, n + 1))
    rules = []
    budget = rng.randint(1, max_rules)
    # even negative loops give programs with several stable models
    for _ in range(rng.randint(0, min(n // 2, budget // 2))):
        a, b = rng.sample(range(1, n + 1), 2) if n > 1 else (1, 1)
        rules += [Rule(a, (), (b,)), Rule(b, (), (a,))]
    for _ in range(max(0, budget - len(rules))):
        constraint = rng.random() < 0.06
        head = 0 if constraint else rng.randint(1, n)
        pool = list(range(1, n + 1))
        if tight and head:
            pool_pos = [a for a in pool if a > head]
        else:
            pool_pos = pool
        k_pos = rng.choice((0, 0, 1, 1, 2, 3))
        k_neg = rng.choice((0, 0, 1, 1, 2))
        pos = tuple(sorted(rng.sample(pool_pos, min(k_pos, len(pool_pos)))))
        neg = tuple(sorted(rng.sample(pool, min(k_neg, n))))
        if constraint and not pos and not neg:
            neg = (rng.randint(1, n),)
        rules.append(Rule(head, pos, neg))
    return Program(tuple(rules), table)


def random_query(rng: random.Random, program: Program) -> frozenset[int]:
    atoms = list(range(1, program.num_atoms + 1))
    if rng.random() < 0.4:
        return frozenset(atoms)
    return frozenset(rng.sample(atoms, rng.randint(0, len(atoms))))


def random_cnf(rng: random.Random, max_vars: int = 12) -> tuple[int, list[tuple[int, ...]]]:
    v = rng.randint(1, max_vars)
    m = rng.randint(1, int(v * 4.5) + 1)
    clauses = []
    for _ in range(m):
        k = rng.choice((1, 2, 2, 3, 3, 3)) if rng.random() < 0.15 else rng.choice((2, 3, 3))
        vs = rng.sample(range(1, v + 1), min(k, v))
        clauses.append(tuple(x if rng.random() < 0.5 else -x for x in vs))
    return v, clauses


def planted_cnf(rng: random.Random, num_vars: int, ratio: float = 4.0) -> tuple[int, list[tuple[int, ...]]]:
    """Random 3-CNF satisfied by a hidden assignment, plus one unit clause."""
    hidden = {v: rng.random() < 0.5 for v in range(1, num_vars + 1)}
    clauses = []
    while len(clauses) < int(num_vars * ratio):
        c = tuple(x if rng.random() < 0.5 else -x for x in rng.sample(range(1, num_vars + 1), 3))
        if any(hidden[abs(l)] == (l > 0) for l in c):
            clauses.append(c)
    clauses.append((1 if hidden[1] else -1,))
    return num_vars, clauses


def dimacs_text(num_vars: int, clauses) -> str:
    lines = [f"p cnf {num_vars} {len(clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in clauses]
    return "\n".join(lines) + "\n"


def cnf_program(num_vars: int, clauses) -> Program:
    return parse_dimacs(dimacs_text(num_vars, clauses))


def backbone_atoms(program: Program, backbone: set[int]) -> frozenset[int]:
    """Map backbone literals to the encoding's t/f atoms."""
    names = [f"t{l}" if l > 0 else f"f{-l}" for l in backbone]
    return program.atom_ids(names)


def prefix_violations(events, query, expected) -> int:
    """Count event prefixes where U ⊆ expected ⊆ O fails."""
    under, over = set(), set(query)
    bad = 0
    for ev in events:
        if ev.kind is EventKind.UNDER_ADD:
            under.add(ev.atom)
        elif ev.kind is EventKind.OVER_REMOVE:
            over.discard(ev.atom)
        else:
            continue
        if not (under <= expected <= over):
            bad += 1
    return bad


def repeats(events) -> int:
    """Atoms added to U twice, removed from O twice, or both added and removed."""
    u = [e.atom for e in events if e.kind is EventKind.UNDER_ADD]
    o = [e.atom for e in events if e.kind is EventKind.OVER_REMOVE]
    return (len(u) - len(set(u))) + (len(o) - len(set(o))) + len(set(u) & set(o))


def cli_output(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = run(parse_config(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def fixture_corpus(count: int, seed: int = 7) -> list[tuple[Program, frozenset[int]]]:
    """Deterministic mixture of random programs and CNF encodings."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        if i % 4 == 3:
            v, cl = random_cnf(rng, 8)
            p = cnf_program(v, cl)
            out.append((p, p.query_atoms()))
        else:
            p = random_program(rng, tight=(i % 2 == 0))
            out.append((p, random_query(rng, p)))
    return out


def write_program(path: Path, program: Program) -> Path:
    from cautious.program import format_program

    path.write_text(format_program(program) + "\n")
    return path


def write_query(path: Path, program: Program, query) -> Path:
    path.write_text("".join(program.name(a) + "\n" for a in sorted(query)))
    return path
