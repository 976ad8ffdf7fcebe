"""Clark completion of a program and the stability check for non-tight programs.

Variables ``1..n`` are the program atoms; rule ``r`` gets the body variable
``n + 1 + r``.  Clause literals are signed variable ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .program import Program

Clause = tuple[int, ...]


@dataclass
class ClauseSet:
    num_atoms: int
    num_vars: int
    clauses: list[Clause]
    body_vars: tuple[int, ...]
    support_map: dict[int, tuple[int, ...]]
    cycle_atoms: frozenset[int]
    # (variable, clauses that mentioned it) in elimination order
    eliminated: list[tuple[int, list[Clause]]] = field(default_factory=list)

    @property
    def tight(self) -> bool:
        return not self.cycle_atoms

    def eliminated_vars(self) -> set[int]:
        return {v for v, _ in self.eliminated}

    def protected_bodies(self, rules) -> set[int]:
        """Body variables that may appear in loop nogoods."""
        return {self.body_vars[i] for i, r in enumerate(rules) if r.head in self.cycle_atoms}

    def extend_model(self, value: list[bool]) -> None:
        """Assign eliminated variables in place so that every clause holds."""
        for var, clauses in reversed(self.eliminated):
            value[var] = False
            for c in clauses:
                if var in c and not any(
                    (value[abs(l)] if l > 0 else not value[abs(l)]) for l in c if abs(l) != var
                ):
                    value[var] = True
                    break


def normalize(lits: Iterable[int]) -> Clause | None:
    """Drop duplicate literals; ``None`` for a tautology."""
    seen = dict.fromkeys(lits)
    if any(-l in seen for l in seen):
        return None
    return tuple(seen)


def positive_sccs(nodes: Iterable[int], succ) -> list[list[int]]:
    """Tarjan's algorithm, iterative; components come out sinks first."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _cycle_atoms(program: Program) -> frozenset[int]:
    deps: dict[int, set[int]] = {}
    for r in program.rules:
        if not r.is_constraint:
            deps.setdefault(r.head, set()).update(r.pos)
    cyclic: set[int] = set()
    for comp in positive_sccs(sorted(deps), lambda a: sorted(deps.get(a, ()))):
        if len(comp) > 1 or comp[0] in deps.get(comp[0], ()):
            cyclic.update(comp)
    return frozenset(cyclic)


def complete(program: Program) -> ClauseSet:
    n = program.num_atoms
    clauses: list[Clause] = []
    body_vars = tuple(n + 1 + i for i in range(len(program.rules)))
    defining: dict[int, list[int]] = {a: [] for a in range(1, n + 1)}

    def add(lits):
        c = normalize(lits)
        if c is not None:
            clauses.append(c)

    for i, rule in enumerate(program.rules):
        b = body_vars[i]
        for a in rule.pos:
            add((-b, a))
        for a in rule.neg:
            add((-b, -a))
        add((b, *(-a for a in rule.pos), *rule.neg))
        if rule.is_constraint:
            add((-b,))
        else:
            add((rule.head, -b))
            defining[rule.head].append(b)
    for a in range(1, n + 1):
        add((-a, *defining[a]))
    return ClauseSet(
        num_atoms=n,
        num_vars=n + len(program.rules),
        clauses=clauses,
        body_vars=body_vars,
        support_map={a: tuple(bs) for a, bs in defining.items()},
        cycle_atoms=_cycle_atoms(program),
    )


@dataclass(frozen=True)
class LoopNogood:
    """Forbids ``loop_atoms`` being true while every external rule body is false."""

    loop_atoms: frozenset[int]
    external_rules: tuple[int, ...]

    def external_support_literals(self, body_vars: Sequence[int]) -> tuple[int, ...]:
        return tuple(body_vars[r] for r in self.external_rules)

    def clauses(self, body_vars: Sequence[int]) -> list[Clause]:
        support = self.external_support_literals(body_vars)
        return [(-a, *support) for a in sorted(self.loop_atoms)]


def least_model_of_reduct(program: Program, interpretation) -> set[int]:
    i = interpretation
    active = [r for r in program.rules if not r.is_constraint and not any(a in i for a in r.neg)]
    waiting: dict[int, list[int]] = {}
    missing = []
    model: set[int] = set()
    queue = []
    for k, r in enumerate(active):
        missing.append(len(set(r.pos)))
        for a in set(r.pos):
            waiting.setdefault(a, []).append(k)
        if missing[k] == 0:
            queue.append(r.head)
    while queue:
        a = queue.pop()
        if a in model:
            continue
        model.add(a)
        for k in waiting.get(a, ()):
            missing[k] -= 1
            if missing[k] == 0:
                queue.append(active[k].head)
    return model


def unfounded_check(program: Program, interpretation) -> LoopNogood | None:
    """``None`` when the interpretation is stable, else a violated loop nogood.

    The interpretation must be a classical model of the completion, which
    makes every such model of a tight program stable.
    """
    if not _cycle_atoms(program):
        return None
    i = set(interpretation)
    unfounded = i - least_model_of_reduct(program, i)
    if not unfounded:
        return None
    edges: dict[int, set[int]] = {a: set() for a in unfounded}
    for r in program.rules:
        if r.head in unfounded and all(a in i for a in r.pos) and not any(a in i for a in r.neg):
            edges[r.head].update(a for a in r.pos if a in unfounded)
    # the first component is a sink: every supported rule of it depends on itself
    loop = frozenset(positive_sccs(sorted(unfounded), lambda a: sorted(edges[a]))[0])
    external = tuple(
        k
        for k, r in enumerate(program.rules)
        if r.head in loop and not any(a in loop for a in r.pos)
    )
    return LoopNogood(loop, external)
