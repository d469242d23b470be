import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from amlab.simplex import LPInfeasible, LPUnbounded, simplex


@given(st.integers(0, 10_000))
def test_matches_highs_on_random_feasible_lps(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(2, 6)), int(rng.integers(6, 14))
    A = rng.normal(size=(m, n))
    b = A @ rng.uniform(0, 1, n)  # feasible by construction
    c = rng.uniform(0.1, 2.0, n)  # positive costs keep it bounded
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    res = simplex(c, A, b)
    assert abs(res.objective - ref.fun) <= 1e-8 * (1 + abs(ref.fun))
    assert np.allclose(A @ res.x, b, atol=1e-8)
    assert np.all(res.x >= -1e-12)
    # dual feasibility and strong duality
    assert np.all(c - A.T @ res.duals >= -1e-8)
    assert abs(b @ res.duals - res.objective) <= 1e-8 * (1 + abs(ref.fun))


def test_beale_cycling_example_terminates():
    # classic degenerate LP on which the textbook rule cycles
    c = np.array([-0.75, 20.0, -0.5, 6.0, 0, 0, 0])
    A = np.array(
        [
            [0.25, -8.0, -1.0, 9.0, 1, 0, 0],
            [0.5, -12.0, -0.5, 3.0, 0, 1, 0],
            [0.0, 0.0, 1.0, 0.0, 0, 0, 1],
        ]
    )
    b = np.array([0.0, 0.0, 1.0])
    res = simplex(c, A, b)
    assert res.objective == pytest.approx(-1.25)


def test_infeasible_names_rows():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(LPInfeasible) as exc:
        simplex(np.ones(2), A, np.array([1.0, 2.0]), row_names=["mass", "other"])
    assert exc.value.rows


def test_unbounded():
    with pytest.raises(LPUnbounded):
        simplex(np.array([-1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([0.0]))


def test_deterministic_pivots():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 10))
    b = A @ rng.uniform(0, 1, 10)
    c = rng.uniform(0.1, 1, 10)
    r1, r2 = simplex(c, A, b), simplex(c, A, b)
    assert np.array_equal(r1.x, r2.x) and r1.pivots == r2.pivots
