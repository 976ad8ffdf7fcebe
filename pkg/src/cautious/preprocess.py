"""One-shot level-0 simplification of a completed program."""

from __future__ import annotations

from dataclasses import dataclass, field

from .completion import Clause, ClauseSet, normalize
from .program import Program


@dataclass
class SimplificationReport:
    fixed_true: set[int] = field(default_factory=set)
    fixed_false: set[int] = field(default_factory=set)
    eliminated: set[int] = field(default_factory=set)
    removed_rule_count: int = 0  # input clauses satisfied, fixed or resolved away
    incoherent: bool = False


class _Simplifier:
    def __init__(self, cs: ClauseSet, protected: set[int], max_occurrences: int):
        self.cs = cs
        self.protected = protected
        self.max_occurrences = max_occurrences
        self.clauses: list[set[int] | None] = []
        self.occ: dict[int, set[int]] = {}
        self.assign: dict[int, bool] = {}
        self.units: list[int] = []
        self.eliminated: list[tuple[int, list[Clause]]] = []
        self.incoherent = False
        for c in cs.clauses:
            self._insert(set(c))

    def _insert(self, lits: set[int]) -> None:
        if self.incoherent:
            return
        live = set()
        for l in lits:
            v = self.assign.get(abs(l))
            if v is None:
                live.add(l)
            elif v == (l > 0):
                return
        if not live:
            self.incoherent = True
        elif len(live) == 1:
            self.units.append(next(iter(live)))
        else:
            idx = len(self.clauses)
            self.clauses.append(live)
            for l in live:
                self.occ.setdefault(l, set()).add(idx)

    def _remove(self, idx: int) -> None:
        c = self.clauses[idx]
        if c is None:
            return
        for l in c:
            self.occ[l].discard(idx)
        self.clauses[idx] = None

    def _strip(self, idx: int, lit: int) -> None:
        c = self.clauses[idx]
        c.discard(lit)
        self.occ[lit].discard(idx)
        if len(c) == 1:
            self.units.append(next(iter(c)))
            self._remove(idx)

    def propagate(self) -> bool:
        changed = False
        while self.units and not self.incoherent:
            lit = self.units.pop()
            v = self.assign.get(abs(lit))
            if v is not None:
                if v != (lit > 0):
                    self.incoherent = True
                continue
            changed = True
            self.assign[abs(lit)] = lit > 0
            for idx in list(self.occ.get(lit, ())):
                self._remove(idx)
            for idx in list(self.occ.get(-lit, ())):
                if self.clauses[idx] is not None:
                    self._strip(idx, -lit)
        return changed

    def subsume(self) -> bool:
        changed = False
        order = sorted(
            (i for i, c in enumerate(self.clauses) if c is not None),
            key=lambda i: len(self.clauses[i]),
        )
        for i in order:
            c = self.clauses[i]
            if c is None or len(c) > 8:
                continue
            for lit in list(c):
                # clauses containing all of c (with lit possibly flipped)
                others = self.occ.get(-lit, set()) | self.occ.get(lit, set())
                for j in list(others):
                    d = self.clauses[j]
                    if j == i or d is None or len(d) < len(c):
                        continue
                    if lit in d and c <= d:
                        self._remove(j)
                        changed = True
                    elif -lit in d and (c - {lit}) <= d:
                        self._strip(j, -lit)
                        changed = True
                c = self.clauses[i]
                if c is None:
                    break
            self.propagate()
            if self.incoherent:
                return True
        return changed

    def eliminate(self) -> bool:
        changed = False
        candidates = [
            v
            for v in range(1, self.cs.num_vars + 1)
            if v not in self.protected and v not in self.assign
        ]
        candidates.sort(key=lambda v: (len(self.occ.get(v, ())) * len(self.occ.get(-v, ())), v))
        done = {v for v, _ in self.eliminated}
        for v in candidates:
            if v in done or v in self.assign or self.incoherent:
                continue
            pos = [i for i in self.occ.get(v, ()) if self.clauses[i] is not None]
            neg = [i for i in self.occ.get(-v, ()) if self.clauses[i] is not None]
            if not pos and not neg:
                continue
            if len(pos) * len(neg) > self.max_occurrences:
                continue
            resolvents = []
            for i in pos:
                for j in neg:
                    r = normalize([l for l in self.clauses[i] if l != v] + [l for l in self.clauses[j] if l != -v])
                    if r is not None:
                        resolvents.append(r)
                        if len(resolvents) > len(pos) + len(neg):
                            break
                if len(resolvents) > len(pos) + len(neg):
                    break
            if len(resolvents) > len(pos) + len(neg):
                continue
            saved = [tuple(sorted(self.clauses[i], key=abs)) for i in pos + neg]
            for i in pos + neg:
                self._remove(i)
            self.eliminated.append((v, saved))
            done.add(v)
            for r in resolvents:
                self._insert(set(r))
            self.propagate()
            changed = True
        return changed


def simplify(
    cs: ClauseSet,
    query,
    program: Program | None = None,
    *,
    eliminate: bool = True,
    max_occurrences: int = 64,
) -> tuple[ClauseSet, SimplificationReport]:
    """Unit propagation, subsumption and bounded variable elimination.

    Query atoms and atoms on positive cycles are never eliminated, nor are
    the body variables of rules defining cycle atoms (they can appear in
    loop nogoods).
    """
    protected = set(query) | set(cs.cycle_atoms)
    if program is not None:
        protected |= cs.protected_bodies(program.rules)
    elif cs.cycle_atoms:
        protected |= set(cs.body_vars)
    s = _Simplifier(cs, protected, max_occurrences)
    s.propagate()
    for _ in range(10):
        if s.incoherent:
            break
        changed = s.subsume()
        if eliminate and not s.incoherent:
            changed = s.eliminate() or changed
        if not changed:
            break

    report = SimplificationReport(incoherent=s.incoherent)
    n = cs.num_atoms
    report.fixed_true = {v for v, val in s.assign.items() if val and v <= n}
    report.fixed_false = {v for v, val in s.assign.items() if not val and v <= n}
    report.eliminated = {v for v, _ in s.eliminated if v <= n}
    survivors = [] if s.incoherent else [tuple(sorted(c, key=abs)) for c in s.clauses if c is not None]
    if s.incoherent:
        clauses: list[Clause] = [()]
    else:
        clauses = [(v if val else -v,) for v, val in sorted(s.assign.items())] + survivors
    # fixed values are reported, not counted as surviving clauses
    kept = set(survivors)
    report.removed_rule_count = sum(1 for c in cs.clauses if tuple(sorted(c, key=abs)) not in kept)
    out = ClauseSet(
        num_atoms=cs.num_atoms,
        num_vars=cs.num_vars,
        clauses=clauses,
        body_vars=cs.body_vars,
        support_map=cs.support_map,
        cycle_atoms=cs.cycle_atoms,
        eliminated=list(cs.eliminated) + s.eliminated,
    )
    return out, report
