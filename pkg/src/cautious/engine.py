"""Stable model search: CDCL over the completion with lazy loop nogoods.

The solver keeps one trail and one learned-clause store across calls, so it
can be queried repeatedly with a single assumption (an atom forced false at
level 1) as the cautious reasoning procedures require.

Removable constraints carry a non-zero ``group``.  Every clause learned from
a group clause, and every level-0 assignment derived from one, inherits the
group and is discarded when the group is removed.  At most one group is
active at any time.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

from .completion import ClauseSet, unfounded_check
from .program import Program

UNDEF, TRUE, FALSE = 0, 1, -1


class Interrupted(Exception):
    """Raised from inside a search when it is cancelled or out of budget."""


class Status(Enum):
    MODEL = "model"
    UNSAT = "unsat"
    RESTART = "restart"


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    model: frozenset[int] | None = None

    @property
    def is_model(self) -> bool:
        return self.status is Status.MODEL


UNSAT = SolveOutcome(Status.UNSAT)
RESTARTED = SolveOutcome(Status.RESTART)


def luby(i: int) -> int:
    """The i-th term (0-based) of 1, 1, 2, 1, 1, 2, 4, 1, ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i %= size
    return 1 << seq


class _Clause:
    __slots__ = ("lits", "learnt", "activity", "group", "deleted")

    def __init__(self, lits: list[int], learnt: bool, group: int):
        self.lits = lits
        self.learnt = learnt
        self.activity = 0.0
        self.group = group
        self.deleted = False


def _join(a: int, b: int) -> int:
    assert not (a and b and a != b), "two removable groups active at once"
    return a or b


def _code(lit: int) -> int:
    return 2 * lit if lit > 0 else -2 * lit + 1


def _signed(code: int) -> int:
    return -(code >> 1) if code & 1 else code >> 1


@dataclass
class Stats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    restarts: int = 0
    learned: int = 0
    loop_nogoods: int = 0
    models: int = 0


@dataclass
class SolverConfig:
    restart_base: int | None = 32  # None or 0 disables restarts
    seed: int = 0
    var_decay: float = 0.95
    clause_decay: float = 0.999
    conflict_budget: int | None = None
    export_limit: int = 2


class Solver:
    """CDCL engine bound to one completed program.

    Public literals are signed variable ids.  Branching always assigns the
    chosen variable false.
    """

    def __init__(
        self,
        program: Program,
        clauses: ClauseSet,
        config: SolverConfig | None = None,
        cancel=None,
        on_learn: Callable[[tuple[int, ...]], None] | None = None,
    ):
        self.program = program
        self.cs = clauses
        self.config = config or SolverConfig()
        self.cancel = cancel
        self.on_learn = on_learn
        self.stats = Stats()
        n = clauses.num_vars
        self.num_vars = n
        self.value = [UNDEF] * (2 * n + 2)
        self.level = [0] * (n + 1)
        self.reason: list[_Clause | None] = [None] * (n + 1)
        self.tag0 = [0] * (n + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.watches: list[list[_Clause]] = [[] for _ in range(2 * n + 2)]
        self.clauses: list[_Clause] = []
        self.learnts: list[_Clause] = []
        self.units: list[_Clause] = []
        self.ok = True
        self.unsat_group = 0
        self.inbox: deque[tuple[int, ...]] = deque()
        self._next_group = 1
        self._seen = [False] * (n + 1)

        self.activity = [0.0] * (n + 1)
        self.var_inc = 1.0
        self.cla_inc = 1.0
        if self.config.seed:
            rng = random.Random(self.config.seed)
            for v in range(1, n + 1):
                self.activity[v] = rng.random() * 1e-5
        eliminated = clauses.eliminated_vars()
        self.decision_vars = [v for v in range(1, n + 1) if v not in eliminated]
        self.heap: list[tuple[float, int]] = [(-self.activity[v], v) for v in self.decision_vars]
        heapq.heapify(self.heap)

        self.restart_count = 0
        self.conflicts_since_restart = 0
        self.max_learnts = max(len(clauses.clauses) / 3, 200.0)
        self._tight = clauses.tight

        for c in clauses.clauses:
            self._add(list(c), learnt=False, group=0)

    # ------------------------------------------------------------ basics

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def lit_value(self, lit: int) -> int:
        return self.value[_code(lit)]

    def _enqueue(self, code: int, reason: _Clause | None, tag: int = 0) -> None:
        v = code >> 1
        self.value[code] = TRUE
        self.value[code ^ 1] = FALSE
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.tag0[v] = tag if not self.trail_lim else 0
        self.trail.append(code)

    def _backtrack(self, level: int) -> None:
        if len(self.trail_lim) <= level:
            return
        start = self.trail_lim[level]
        value, heap, act = self.value, self.heap, self.activity
        for code in self.trail[start:]:
            value[code] = UNDEF
            value[code ^ 1] = UNDEF
            v = code >> 1
            self.reason[v] = None
            heapq.heappush(heap, (-act[v], v))
        del self.trail[start:]
        del self.trail_lim[level:]
        self.qhead = min(self.qhead, start)

    def _check_cancel(self) -> None:
        if self.cancel is not None and self.cancel.is_set():
            raise Interrupted("cancelled")
        budget = self.config.conflict_budget
        if budget is not None and self.stats.conflicts >= budget:
            raise Interrupted("conflict budget exhausted")

    # ------------------------------------------------------------ clauses

    def _level0_tag(self, c: _Clause, skip: int = -1) -> int:
        tag = c.group
        for code in c.lits:
            if code != skip:
                tag = _join(tag, self.tag0[code >> 1])
        return tag

    def _add(self, lits: list[int], learnt: bool, group: int) -> _Clause | None:
        """Add a clause at decision level 0; returns it unless it is empty."""
        assert not self.trail_lim
        codes = list(dict.fromkeys(_code(l) for l in lits))
        if any(c ^ 1 in codes for c in codes):
            return None
        c = _Clause(codes, learnt, group)
        if not codes:
            self._set_unsat(group)
            return None
        if len(codes) == 1:
            self.units.append(c)
            val = self.value[codes[0]]
            if val == FALSE:
                self._set_unsat(_join(group, self.tag0[codes[0] >> 1]))
            elif val == UNDEF:
                self._enqueue(codes[0], c, group)
            return c
        value = self.value
        codes.sort(key=lambda x: value[x] == FALSE)
        self.watches[codes[0]].append(c)
        self.watches[codes[1]].append(c)
        (self.learnts if learnt else self.clauses).append(c)
        if value[codes[0]] == FALSE:
            self._set_unsat(self._level0_tag(c))
        elif value[codes[1]] == FALSE and value[codes[0]] == UNDEF:
            self._enqueue(codes[0], c, self._level0_tag(c, codes[0]))
        return c

    def _set_unsat(self, tag: int) -> None:
        if self.ok:
            self.ok = False
            self.unsat_group = tag
        elif self.unsat_group and not tag:
            self.unsat_group = 0

    def add_constraint(self, lits: Iterable[int], removable: bool = False) -> int:
        """Add a clause between searches; returns its group (0 if permanent)."""
        self._backtrack(0)
        group = 0
        if removable:
            group = self._next_group
            self._next_group += 1
        self._add(list(lits), learnt=False, group=group)
        return group

    def remove_group(self, group: int) -> None:
        if not group:
            return
        self._backtrack(0)
        for store in (self.clauses, self.learnts, self.units):
            for c in store:
                if c.group == group:
                    c.deleted = True
            store[:] = [c for c in store if not c.deleted]
        for ws in self.watches:
            ws[:] = [c for c in ws if not c.deleted]
        if not self.ok and self.unsat_group == group:
            self.ok = True
            self.unsat_group = 0
        self._reset_level0()

    def _reset_level0(self) -> None:
        for code in self.trail:
            self.value[code] = UNDEF
            self.value[code ^ 1] = UNDEF
            v = code >> 1
            self.reason[v] = None
            self.tag0[v] = 0
            heapq.heappush(self.heap, (-self.activity[v], v))
        self.trail.clear()
        self.qhead = 0
        if not self.ok:
            return
        for c in self.units:
            val = self.value[c.lits[0]]
            if val == FALSE:
                self._set_unsat(_join(c.group, self.tag0[c.lits[0] >> 1]))
                return
            if val == UNDEF:
                self._enqueue(c.lits[0], c, c.group)
        confl = self.propagate()
        if confl is not None:
            self._set_unsat(self._level0_tag(confl))

    def import_clause(self, lits: Sequence[int]) -> None:
        """Queue a clause valid in every stable model; added at the next level-0 point."""
        self.inbox.append(tuple(lits))

    def _drain_inbox(self) -> None:
        while self.inbox:
            lits = self.inbox.popleft()
            self._add(list(lits), learnt=True, group=0)

    # ------------------------------------------------------------ propagation

    def propagate(self) -> _Clause | None:
        """Unit propagation to fixpoint; returns a conflicting clause or None."""
        value, watches, trail = self.value, self.watches, self.trail
        at_root = not self.trail_lim
        while self.qhead < len(trail):
            false_code = trail[self.qhead] ^ 1
            self.qhead += 1
            self.stats.propagations += 1
            ws = watches[false_code]
            i = 0
            keep: list[_Clause] = []
            while i < len(ws):
                c = ws[i]
                i += 1
                if c.deleted:
                    continue
                lits = c.lits
                if lits[0] == false_code:
                    lits[0], lits[1] = lits[1], lits[0]
                first = lits[0]
                if value[first] == TRUE:
                    keep.append(c)
                    continue
                for k in range(2, len(lits)):
                    if value[lits[k]] != FALSE:
                        lits[1], lits[k] = lits[k], lits[1]
                        watches[lits[1]].append(c)
                        break
                else:
                    keep.append(c)
                    if value[first] == FALSE:
                        keep.extend(ws[i:])
                        watches[false_code] = keep
                        self.qhead = len(trail)
                        return c
                    self._enqueue(first, c, self._level0_tag(c, first) if at_root else 0)
            watches[false_code] = keep
        return None

    # ------------------------------------------------------------ learning

    def _bump_var(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(1, self.num_vars + 1):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-act[u], u) for u in self.decision_vars if self.value[2 * u] == UNDEF]
            heapq.heapify(self.heap)
        elif self.value[2 * v] == UNDEF:
            heapq.heappush(self.heap, (-act[v], v))

    def _bump_clause(self, c: _Clause) -> None:
        c.activity += self.cla_inc
        if c.activity > 1e20:
            for d in self.learnts:
                d.activity *= 1e-20
            self.cla_inc *= 1e-20

    def analyze(self, confl: _Clause) -> tuple[list[int], int, int]:
        """First-UIP learning: (learned literals, backjump level, group)."""
        seen = self._seen
        level = self.level
        current = len(self.trail_lim)
        learnt = [0]
        tag = confl.group
        counter = 0
        p = -1
        idx = len(self.trail) - 1
        c: _Clause | None = confl
        while True:
            assert c is not None
            if c.learnt:
                self._bump_clause(c)
            tag = _join(tag, c.group)
            for code in c.lits:
                if code == p:
                    continue
                v = code >> 1
                if seen[v]:
                    continue
                if level[v] == 0:
                    tag = _join(tag, self.tag0[v])
                    continue
                seen[v] = True
                self._bump_var(v)
                if level[v] >= current:
                    counter += 1
                else:
                    learnt.append(code)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            v = p >> 1
            seen[v] = False
            counter -= 1
            if counter == 0:
                break
            c = self.reason[v]
        learnt[0] = p ^ 1
        for code in learnt[1:]:
            seen[code >> 1] = False
        back = 0
        if len(learnt) > 1:
            best = max(range(1, len(learnt)), key=lambda k: level[learnt[k] >> 1])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = level[learnt[1] >> 1]
        return [_signed(x) for x in learnt], back, tag

    def _record(self, lits: list[int], group: int) -> None:
        """Attach a learned clause after backjumping; asserts its first literal."""
        codes = [_code(l) for l in lits]
        c = _Clause(codes, learnt=True, group=group)
        self.stats.learned += 1
        if len(codes) == 1:
            self.units.append(c)
            self._enqueue(codes[0], c, group)
        else:
            self.watches[codes[0]].append(c)
            self.watches[codes[1]].append(c)
            self.learnts.append(c)
            self._bump_clause(c)
            self._enqueue(codes[0], c, 0)
        if self.on_learn is not None and not group and len(codes) <= self.config.export_limit:
            self.on_learn(tuple(lits))

    def _reduce_db(self) -> None:
        long = [c for c in self.learnts if len(c.lits) > 2]
        if len(long) < self.max_learnts:
            return
        long.sort(key=lambda c: c.activity)
        for c in long[: len(long) // 2]:
            v = c.lits[0] >> 1
            if self.reason[v] is c and self.value[c.lits[0]] == TRUE and self.level[v] > 0:
                continue
            c.deleted = True
        self.learnts = [c for c in self.learnts if not c.deleted]
        self.max_learnts *= 1.1

    # ------------------------------------------------------------ search

    def _restart_limit(self) -> float:
        base = self.config.restart_base
        if not base:
            return float("inf")
        return base * luby(self.restart_count)

    def _pick_branch(self) -> int | None:
        heap, value, act = self.heap, self.value, self.activity
        while heap:
            neg_act, v = heapq.heappop(heap)
            if value[2 * v] == UNDEF and -neg_act == act[v]:
                return v
        return None

    def _full_model(self) -> frozenset[int]:
        value = [False] * (self.num_vars + 1)
        for code in self.trail:
            if not code & 1:
                value[code >> 1] = True
        if self.cs.eliminated:
            self.cs.extend_model(value)
        return frozenset(a for a in range(1, self.cs.num_atoms + 1) if value[a])

    def solve(self, assume: int | None = None, until_restart: bool = False) -> SolveOutcome:
        """Search for a stable model with atom ``assume`` (if any) false.

        Returns UNSAT when no stable model of the current clauses leaves the
        assumed atom false.  With ``until_restart`` the search gives up with
        RESTARTED when the restart threshold fires; learned clauses stay.
        """
        self._backtrack(0)
        self._drain_inbox()
        if not self.ok:
            return UNSAT
        while True:
            self._check_cancel()
            confl = self.propagate()
            if confl is not None:
                self.stats.conflicts += 1
                self.conflicts_since_restart += 1
                if not self.trail_lim:
                    self._set_unsat(self._level0_tag(confl))
                    return UNSAT
                lits, back, group = self.analyze(confl)
                self._backtrack(back)
                self._record(lits, group)
                self.var_inc /= self.config.var_decay
                self.cla_inc /= self.config.clause_decay
                continue
            if self.conflicts_since_restart >= self._restart_limit():
                self.restart_count += 1
                self.stats.restarts += 1
                self.conflicts_since_restart = 0
                self._backtrack(0)
                self._drain_inbox()
                self._reduce_db()
                if not self.ok:
                    return UNSAT
                if until_restart:
                    return RESTARTED
                continue
            if not self.trail_lim and assume is not None:
                val = self.value[_code(-assume)]
                if val == FALSE:
                    return UNSAT
                self.trail_lim.append(len(self.trail))
                if val == UNDEF:
                    self._enqueue(_code(-assume), None)
                continue
            v = self._pick_branch()
            if v is None:
                model = self._full_model()
                if not self._tight:
                    nogood = unfounded_check(self.program, model)
                    if nogood is not None:
                        self.stats.loop_nogoods += 1
                        self._backtrack(0)
                        for clause in nogood.clauses(self.cs.body_vars):
                            self._add(list(clause), learnt=False, group=0)
                            if self.on_learn and len(clause) <= self.config.export_limit:
                                self.on_learn(clause)
                        if not self.ok:
                            return UNSAT
                        continue
                self.stats.models += 1
                self._backtrack(0)
                return SolveOutcome(Status.MODEL, model)
            self.stats.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(2 * v + 1, None)

    def solve_until_restart(self, assume: int | None = None) -> SolveOutcome:
        return self.solve(assume, until_restart=True)

    # ------------------------------------------------------------ inspection

    def level0_true(self) -> set[int]:
        """Atoms true at decision level 0 (entailed by the current clauses)."""
        if not self.trail_lim and self.ok:
            confl = self.propagate()
            if confl is not None:
                self._set_unsat(self._level0_tag(confl))
        n = self.cs.num_atoms
        end = self.trail_lim[0] if self.trail_lim else len(self.trail)
        return {code >> 1 for code in self.trail[:end] if not code & 1 and code >> 1 <= n}

    def decide(self, lit: int) -> None:
        """Open a new decision level with ``lit`` (testing hook)."""
        self.trail_lim.append(len(self.trail))
        self._enqueue(_code(lit), None)

    def learn(self, lits: list[int], back: int, group: int = 0) -> None:
        self._backtrack(back)
        self._record(lits, group)

    def value_of(self, var: int) -> bool | None:
        val = self.value[2 * var]
        return None if val == UNDEF else val == TRUE


def compute_stable_model(solver: Solver, assume: int | None = None) -> SolveOutcome:
    return solver.solve(assume)


def compute_up_to_next_restart(solver: Solver, assume: int | None = None) -> SolveOutcome:
    return solver.solve(assume, until_restart=True)


def compute_stable_model_star(
    solver: Solver, assume: int | None, before_segment: Callable[[], None]
) -> SolveOutcome:
    """Search across restarts, calling ``before_segment`` at each level-0 point.

    The callback is where the caller harvests atoms entailed at level 0.
    """
    while True:
        before_segment()
        res = solver.solve(assume, until_restart=True)
        if res.status is not Status.RESTART:
            return res
