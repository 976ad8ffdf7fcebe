"""Brute-force reference semantics used to check the solver at desk scale.

Nothing here touches the completion, the preprocessor or the search engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .program import Program


class OracleBoundError(ValueError):
    pass


@dataclass
class OracleResult:
    stable_models: list[frozenset[int]]

    @property
    def coherent(self) -> bool:
        return bool(self.stable_models)

    @property
    def cautious(self) -> frozenset[int] | None:
        """Intersection of the stable models; None when there are none."""
        if not self.stable_models:
            return None
        return frozenset.intersection(*self.stable_models)

    def answer(self, query) -> frozenset[int] | None:
        cc = self.cautious
        return None if cc is None else cc & frozenset(query)


def _reduct_fixpoint(rules, interpretation: frozenset[int]) -> set[int]:
    reduct = [(r.head, r.pos) for r in rules if not r.is_constraint and not (set(r.neg) & interpretation)]
    model: set[int] = set()
    for _ in range(len(reduct) + 1):
        grown = {h for h, pos in reduct if all(a in model for a in pos)}
        if grown <= model:
            break
        model |= grown
    return model


def _violates_constraint(rules, i: frozenset[int]) -> bool:
    return any(
        r.is_constraint and all(a in i for a in r.pos) and not any(a in i for a in r.neg)
        for r in rules
    )


def enumerate_stable_models(program: Program, bound: int = 20) -> OracleResult:
    """Every stable model of ``program``.

    The reduct only depends on which negatively occurring atoms are true,
    so each guess ``S`` over those atoms yields one candidate: the least
    model ``L`` of the reduct w.r.t. ``S``.  ``L`` is stable iff it agrees
    with ``S`` on the guessed atoms and violates no constraint.
    """
    heads = {r.head for r in program.rules if not r.is_constraint}
    guessed = sorted(heads & {a for r in program.rules for a in r.neg})
    if len(guessed) > bound:
        raise OracleBoundError(f"{len(guessed)} guessed atoms exceed the bound of {bound}")
    found = []
    for bits in product((False, True), repeat=len(guessed)):
        s = frozenset(a for a, b in zip(guessed, bits) if b)
        lm = frozenset(_reduct_fixpoint(program.rules, s))
        if lm & frozenset(guessed) == s and not _violates_constraint(program.rules, lm):
            found.append(lm)
    found.sort(key=lambda m: sorted(m))
    return OracleResult(found)


def cnf_backbone(num_vars: int, clauses) -> tuple[list[tuple[bool, ...]], set[int] | None]:
    """Classical models and backbone literals of a CNF by truth-table search."""
    models = []
    for bits in product((False, True), repeat=num_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            models.append(bits)
    if not models:
        return models, None
    backbone = set()
    for v in range(1, num_vars + 1):
        vals = {m[v - 1] for m in models}
        if len(vals) == 1:
            backbone.add(v if vals.pop() else -v)
    return models, backbone
