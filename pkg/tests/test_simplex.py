import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from dispersion_lab.simplex import Infeasible, Unbounded, linprog_eq


def test_small_known_optimum():
    # min -x0 - x1  s.t. x0 + x2 = 1, x1 + x3 = 2
    a = [[1, 0, 1, 0], [0, 1, 0, 1]]
    res = linprog_eq([-1, -1, 0, 0], a, [1, 2])
    assert res.fun == pytest.approx(-3.0)
    np.testing.assert_allclose(res.x, [1, 2, 0, 0], atol=1e-12)


def test_redundant_rows_are_dropped():
    a = [[1, 1, 1], [2, 2, 2], [1, 0, 0]]
    res = linprog_eq([0, 1, 2], a, [1, 2, 0.25])
    assert res.fun == pytest.approx(0.75)
    np.testing.assert_allclose(res.x, [0.25, 0.75, 0.0], atol=1e-12)


def test_infeasible():
    with pytest.raises(Infeasible):
        linprog_eq([1, 1], [[1, 1]], [-1])


def test_unbounded():
    with pytest.raises(Unbounded):
        linprog_eq([-1, 0], [[1, -1]], [0])


@given(st.integers(0, 10_000))
def test_matches_scipy_on_random_simplex_faces(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 4), rng.integers(2, 7)
    a = np.vstack([rng.standard_normal((m, n)), np.ones(n)])
    x0 = rng.dirichlet(np.ones(n))
    b = a @ x0
    c = rng.standard_normal(n)
    ours = linprog_eq(c, a, b)
    ref = linprog(c, A_eq=a, b_eq=b, bounds=[(0, None)] * n, method="highs")
    assert ref.status == 0
    assert ours.fun == pytest.approx(ref.fun, abs=1e-8)
    np.testing.assert_allclose(a @ ours.x, b, atol=1e-9)
    assert ours.x.min() >= -1e-12
