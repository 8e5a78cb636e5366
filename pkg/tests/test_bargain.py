import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from coopnet.bargain import PayoffTriple, feasible_agreement, bargaining_feasible, nash_product, nbs_allocate
from coopnet.errors import NoAgreement
from oracles import nash_grid

money = st.floats(-1e4, 1e4, allow_nan=False)


def _triples():
    return st.builds(lambda f, g, pool: PayoffTriple(f, g, pool),
                     st.tuples(money, money), st.tuples(money, money), st.floats(1.0, 1e4))


def test_feasibility_examples():
    assert not bargaining_feasible(PayoffTriple((13, 18), (10, 20), 0))
    assert bargaining_feasible(PayoffTriple((10, 20), (12, 21), 5))
    assert not bargaining_feasible(PayoffTriple((10, 20), (10, 20), 0))


def test_allocation_example():
    a = nbs_allocate(PayoffTriple((10, 20), (12, 21), 5))
    assert a.shares == (2.0, 3.0)
    assert a.payoffs == (14.0, 24.0)


def test_allocation_matches_grid_search_example():
    q1, _ = nash_grid((10, 20), (12, 21), 5)
    assert abs(q1 - 2.0) < 1e-3 * 5


def test_negative_pool_rejected():
    with pytest.raises(ValueError):
        PayoffTriple((0, 0), (0, 0), -1)


def test_no_agreement_raised():
    with pytest.raises(NoAgreement):
        nbs_allocate(PayoffTriple((13, 18), (10, 20), 0))


def test_feasible_agreement_examples():
    assert feasible_agreement((14, 24), (12, 21))
    assert not feasible_agreement((14, 20), (12, 21))
    assert feasible_agreement((12, 21), (12, 21))
    with pytest.raises(ValueError):
        feasible_agreement((1, 2), (1,))


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(1.0, 1e3))
def test_symmetric_parties_get_equal_shares(a, b, pool):
    t = PayoffTriple((a, a), (b, b), pool)
    assume(bargaining_feasible(t))
    q = nbs_allocate(t).shares
    assert math.isclose(q[0], q[1], rel_tol=1e-9, abs_tol=1e-9 * pool)


@given(_triples())
def test_affine_rescaling_commutes(t):
    assume(bargaining_feasible(t))
    scale = lambda v: 2 * v + 3  # noqa: E731
    # payoffs map by v -> 2v + 3; the pool is a difference, so it only doubles
    t2 = PayoffTriple(tuple(map(scale, t.no_mech)), tuple(map(scale, t.stage1)), 2 * t.pool)
    v, v2 = nbs_allocate(t).payoffs, nbs_allocate(t2).payoffs
    for a, b in zip(v, v2):
        assert math.isclose(scale(a), b, rel_tol=1e-9, abs_tol=1e-7)


@given(_triples())
def test_budget_balance_and_improvement(t):
    assume(bargaining_feasible(t))
    a = nbs_allocate(t)
    assert math.isclose(sum(a.shares), t.pool, rel_tol=1e-9, abs_tol=1e-9)
    for v, f in zip(a.payoffs, t.no_mech):
        assert v > f
    assert feasible_agreement(a.payoffs, t.no_mech)


@given(_triples())
def test_optimum_is_strict(t):
    assume(bargaining_feasible(t) and t.surplus > 1e-3 * t.pool)
    a = nbs_allocate(t)
    # an eps shift lowers the product by eps**2, below float resolution; compare exactly
    F = [Fraction(v) for v in (*t.no_mech, *t.stage1, t.pool, *a.shares)]
    f1, f2, g1, g2, pool, q1, _ = F

    def prod(q):
        return (g1 + q - f1) * (g2 + pool - q - f2)

    best = prod(q1)
    for eps in (Fraction(1e-6) * pool, Fraction(1e-3) * pool):
        for sign in (-1, 1):
            assert prod(q1 + sign * eps) < best
    assert math.isclose(float(best), nash_product(t, a.shares), rel_tol=1e-9, abs_tol=1e-9)


@given(_triples())
def test_pareto_frontier(t):
    assume(bargaining_feasible(t))
    v = nbs_allocate(t).payoffs
    assert math.isclose(sum(v), sum(t.stage1) + t.pool, rel_tol=1e-12, abs_tol=1e-9)


def test_irrelevant_alternatives():
    t = PayoffTriple((10, 20), (12, 21), 5)
    full = nash_grid(t.no_mech, t.stage1, t.pool)
    narrow = nash_grid(t.no_mech, t.stage1, t.pool, lo=1.5, hi=2.5)
    assert full == pytest.approx(narrow, abs=1e-9)
    assert narrow[0] == pytest.approx(nbs_allocate(t).shares[0], abs=1e-3 * t.pool)
