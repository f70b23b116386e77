from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from extmle.polyhedra import LPStatus, RationalLP, solve_rational_lp


def test_beale_cycling_example():
    # cycles under the textbook largest-coefficient rule
    F = Fraction
    lp = RationalLP(
        objective=[F(3, 4), -20, F(1, 2), -6],
        A_ub=[[F(1, 4), -8, -1, 9], [F(1, 2), -12, F(-1, 2), 3], [0, 0, 1, 0]],
        b_ub=[0, 0, 1],
    )
    res = solve_rational_lp(lp)
    assert res.status is LPStatus.OPTIMAL
    assert res.value == F(5, 4)


def test_infeasible_and_unbounded():
    assert solve_rational_lp(RationalLP([1], A_ub=[[1]], b_ub=[-1])).status is LPStatus.INFEASIBLE
    assert solve_rational_lp(RationalLP([1, 1], A_ub=[[1, -1]], b_ub=[0])).status is LPStatus.UNBOUNDED


def test_equalities_free_and_bounded_variables():
    # max x + y, x + y = 3, x free, 0 <= y <= 1, x <= 2
    lp = RationalLP([1, 1], A_ub=[[1, 0]], b_ub=[2], A_eq=[[1, 1]], b_eq=[3],
                    bounds=[(None, None), (0, 1)])
    res = solve_rational_lp(lp)
    assert res.status is LPStatus.OPTIMAL and res.value == 3
    x, y = res.x
    assert x + y == 3 and x <= 2 and 0 <= y <= 1


def test_redundant_equalities():
    lp = RationalLP([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
    res = solve_rational_lp(lp)
    assert res.status is LPStatus.OPTIMAL and res.value == 2


def test_negative_lower_bound():
    res = solve_rational_lp(RationalLP([-1], bounds=[(-3, 5)]))
    assert res.value == 3 and res.x == [-3]


@settings(max_examples=150)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_matches_scipy(n, m, data):
    ints = st.integers(-4, 4)
    c = data.draw(st.lists(ints, min_size=n, max_size=n))
    A = data.draw(st.lists(st.lists(ints, min_size=n, max_size=n), min_size=m, max_size=m))
    b = data.draw(st.lists(st.integers(-2, 6), min_size=m, max_size=m))
    hi = data.draw(st.lists(st.one_of(st.none(), st.integers(1, 5)), min_size=n, max_size=n))
    bounds = [(0, h) for h in hi]
    res = solve_rational_lp(RationalLP(c, A, b, bounds=bounds))
    ref = linprog(-np.array(c, float), A_ub=np.array(A, float), b_ub=np.array(b, float),
                  bounds=bounds, method="highs")
    if ref.status == 0:
        expected = LPStatus.OPTIMAL
    else:
        # HiGHS may report either status for infeasible-or-unbounded; settle feasibility alone
        feas = linprog(np.zeros(n), A_ub=np.array(A, float), b_ub=np.array(b, float),
                       bounds=bounds, method="highs")
        expected = LPStatus.UNBOUNDED if feas.status == 0 else LPStatus.INFEASIBLE
    assert res.status is expected
    if expected is LPStatus.OPTIMAL:
        assert float(res.value) == pytest.approx(-ref.fun, abs=1e-9)
        x = [Fraction(int(v.numerator), int(v.denominator)) for v in res.x]
        assert all(sum(a * xi for a, xi in zip(row, x)) <= bi for row, bi in zip(A, b))
        assert sum(ci * xi for ci, xi in zip(c, x)) == res.value
