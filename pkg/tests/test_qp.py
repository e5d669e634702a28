import numpy as np
import pytest
from hypothesis import given, strategies as st

from chddp.qp import constrained_qp_step, project_simplex
from oracles import qp_active_set_enumeration, qp_grid_search, qp_objective


def random_instance(rng, with_simplex):
    n = int(rng.integers(2 if with_simplex else 1, 5))
    M = rng.standard_normal((n, n))
    H = M @ M.T / n + 0.3 * np.eye(n)
    g = rng.standard_normal(n)
    if with_simplex:
        ns = int(rng.integers(2, n + 1))
        sl = slice(n - ns, n)
        p = rng.dirichlet(np.ones(ns))
        lo, hi = -np.ones(n), np.ones(n)
        lo[sl], hi[sl] = -p, 1 - p
        return H, g, lo, hi, sl
    return H, g, -rng.uniform(0.1, 1, n), rng.uniform(0.1, 1, n), None


def test_interior_optimum():
    r = constrained_qp_step(np.eye(3), np.full(3, -0.1), -np.ones(3), np.ones(3))
    np.testing.assert_allclose(r.x, [0.1, 0.1, 0.1], atol=1e-12)
    assert r.basis.shape == (3, 3)


def test_one_dimensional_clamp():
    r = constrained_qp_step(np.array([[2.0]]), np.array([-4.0]), np.array([-1.0]), np.array([1.0]))
    np.testing.assert_allclose(r.x, [1.0])
    assert r.basis.shape[1] == 0


def test_three_simplex_against_grid():
    pbar = np.full(3, 1 / 3)
    H, g = np.eye(3), np.array([-1.0, 0.0, 1.0])
    lo, hi = -pbar, 1 - pbar
    r = constrained_qp_step(H, g, lo, hi, simplex=slice(0, 3))
    f_grid, _ = qp_grid_search(H, g, lo, hi, [0, 1, 2], resolution=1e-3)
    assert abs(qp_objective(H, g, r.x) - f_grid) <= 1e-4
    assert abs(r.x.sum()) <= 1e-10
    np.testing.assert_allclose(r.x, [2 / 3, -1 / 3, -1 / 3], atol=1e-9)


@pytest.mark.parametrize("with_simplex", [False, True])
def test_matches_exact_enumeration(with_simplex):
    rng = np.random.default_rng(11 + with_simplex)
    for _ in range(40):
        H, g, lo, hi, sl = random_instance(rng, with_simplex)
        idx = None if sl is None else list(range(len(g)))[sl]
        f_exact, _ = qp_active_set_enumeration(H, g, lo, hi, idx)
        r = constrained_qp_step(H, g, lo, hi, simplex=sl)
        assert qp_objective(H, g, r.x) <= f_exact + 1e-9


def test_basis_spans_free_directions_only():
    # coordinate 0 pinned at its upper bound, simplex pair free
    H = np.eye(3)
    g = np.array([-5.0, -0.1, 0.1])
    lo = np.array([-1.0, -0.5, -0.5])
    hi = np.array([1.0, 0.5, 0.5])
    r = constrained_qp_step(H, g, lo, hi, simplex=slice(1, 3))
    assert r.x[0] == pytest.approx(1.0)
    assert r.basis.shape[1] == 1
    assert r.basis[0, 0] == 0.0
    assert r.basis[1:, 0].sum() == pytest.approx(0.0)


@given(st.integers(0, 2**32 - 1), st.booleans())
def test_qp_output_properties(seed, with_simplex):
    rng = np.random.default_rng(seed)
    H, g, lo, hi, sl = random_instance(rng, with_simplex)
    r = constrained_qp_step(H, g, lo, hi, simplex=sl)
    assert np.all(r.x >= lo - 1e-12) and np.all(r.x <= hi + 1e-12)
    if sl is not None:
        assert abs(r.x[sl].sum()) <= 1e-10
    assert qp_objective(H, g, r.x) <= 1e-15


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_project_simplex(y):
    y = np.array(y)
    p = project_simplex(y)
    assert np.all(p >= 0) and p.sum() == pytest.approx(1.0, abs=1e-12)
    # optimality: no feasible vertex is closer
    d = np.sum((p - y) ** 2)
    for i in range(len(y)):
        e = np.zeros(len(y))
        e[i] = 1.0
        assert d <= np.sum((e - y) ** 2) + 1e-12


def test_project_simplex_vertex_fixed_point():
    e = np.array([0.0, 1.0, 0.0])
    np.testing.assert_array_equal(project_simplex(e), e)
