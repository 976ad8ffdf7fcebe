import random

from helpers import cnf_program, example1, example1_query, random_cnf, random_program
from hypothesis import given, settings
from hypothesis import strategies as st

from cautious.completion import ClauseSet, complete
from cautious.engine import Solver
from cautious.oracle import enumerate_stable_models
from cautious.preprocess import simplify

FACTS = {"R_in(2,2,2)", "R_in(2,2,3)", "Q(2,2)", "Q(2,3)"}


def test_unit_fixpoint():
    cs = ClauseSet(2, 2, [(1,), (-1, 2)], (), {}, frozenset())
    out, report = simplify(cs, set())
    assert report.fixed_true >= {1, 2}
    assert report.removed_rule_count == 2
    assert not report.incoherent
    assert sorted(out.clauses) == [(1,), (2,)]


def test_conflicting_units():
    cs = ClauseSet(1, 1, [(1,), (-1,)], (), {}, frozenset())
    out, report = simplify(cs, set())
    assert report.incoherent and out.clauses == [()]


def test_example_unit_propagation_alone():
    p = example1()
    q = example1_query(p)
    _, report = simplify(complete(p), q, p, eliminate=False)
    assert set(p.names(report.fixed_true)) == FACTS
    assert not report.fixed_false


def test_example_with_elimination_fixes_q11():
    p = example1()
    q = example1_query(p)
    _, report = simplify(complete(p), q, p)
    assert set(p.names(report.fixed_true)) == FACTS | {"Q(1,1)"}
    # the relation atoms are outside the query and get resolved away
    assert set(p.names(report.eliminated)) == {
        f"R_{k}({t})" for k in ("in", "out") for t in ("1,1,1", "1,2,1", "3,2,2", "3,3,3")
    }
    assert report.eliminated.isdisjoint(q)


def test_query_atoms_never_eliminated():
    p = example1()
    _, report = simplify(complete(p), p.query_atoms(), p)
    assert not report.eliminated
    assert set(p.names(report.fixed_true)) == FACTS


def test_reduction_share_is_reported():
    rng = random.Random(11)
    v, clauses = random_cnf(rng, 10)
    clauses = clauses + [(1,), (-1, 2)]
    p = cnf_program(v, clauses)
    q = p.query_atoms()
    _, report = simplify(complete(p), q, p)
    share = len((report.fixed_true | report.fixed_false) & q) / len(q)
    assert 0 < share <= 1


def cautious_via_solver(p, q, cs):
    s = Solver(p, cs)
    first = s.solve()
    if not first.is_model:
        return None, []
    models = [first.model]
    out = set()
    for a in sorted(q):
        res = s.solve(a)
        if res.is_model:
            models.append(res.model)
        else:
            out.add(a)
    return frozenset(out), models


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_simplification_preserves_cautious_consequences(seed):
    rng = random.Random(seed)
    p = random_program(rng)
    q = frozenset(a for a in range(1, p.num_atoms + 1) if rng.random() < 0.6)
    oracle = enumerate_stable_models(p)
    cs, report = simplify(complete(p), q, p)
    assert report.incoherent <= (not oracle.coherent)
    got, models = cautious_via_solver(p, q, cs)
    assert got == oracle.answer(q)
    for m in models:
        # projections onto the query must come from genuine stable models
        assert any(m & q == s & q for s in oracle.stable_models)
    if oracle.coherent:
        cc = oracle.cautious
        assert report.fixed_true & q <= cc
        assert not report.fixed_false & q & cc
