import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pnpfd import dense
from pnpfd.elliptic import (
    ConvergenceError,
    SpectralPoissonSolver,
    hminus1_norm,
    inv_laplacian,
    poisson_solver,
    weighted_norm,
    weighted_solve,
)
from pnpfd.grid import GridSpec, face_average, inner_product, laplacian, project_mean_zero, weighted_divergence


def test_symbol_matches_stencil_eigenvalues():
    g = GridSpec(2, 8, 2.0)
    sym = SpectralPoissonSolver(g).symbol
    k = np.arange(8)
    lam1 = 4 / g.h**2 * np.sin(np.pi * k / 8) ** 2
    np.testing.assert_allclose(sym[:, : sym.shape[1]], (lam1[:, None] + lam1[None, : sym.shape[1]]))
    assert sym[0, 0] == 0.0


@given(st.sampled_from([2, 3]), st.integers(3, 16), st.integers(0, 2**31))
def test_roundtrip(dim, n, seed):
    g = GridSpec(dim, n, 1.7)
    f = project_mean_zero(np.random.default_rng(seed).normal(size=g.shape))
    u = inv_laplacian(g, f)
    assert abs(np.mean(u)) <= 1e-14 * np.max(np.abs(u))
    assert np.max(np.abs(-laplacian(g, u) - f)) <= 1e-12 * np.max(np.abs(f))


def test_rejects_nonzero_mean():
    g = GridSpec(2, 8)
    with pytest.raises(ValueError):
        inv_laplacian(g, g.full(1.0))


def test_solver_cache_is_shared():
    assert poisson_solver(GridSpec(2, 8)) is poisson_solver(GridSpec(2, 8))


def test_hminus1_norm_of_mode():
    g = GridSpec(2, 16)
    x, _ = g.cell_centers()
    f = np.cos(2 * np.pi * x)
    lam = 4 / g.h**2 * np.sin(np.pi / 16) ** 2
    assert hminus1_norm(g, f) ** 2 == pytest.approx(inner_product(g, f, f) / lam, rel=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_dense_oracles(rng, dim):
    g = GridSpec(dim, 4, 2.0)
    f = project_mean_zero(rng.normal(size=g.shape))
    w = rng.uniform(0.3, 3.0, size=g.shape)
    np.testing.assert_allclose(inv_laplacian(g, f), dense.inv_laplacian(g, f), atol=1e-12)
    np.testing.assert_allclose(weighted_solve(g, w, f, tol=1e-13), dense.weighted_solve(g, w, f), atol=1e-10)
    faces = tuple(rng.uniform(0.3, 3.0, size=g.shape) for _ in range(dim))
    np.testing.assert_allclose(weighted_solve(g, faces, f, tol=1e-13), dense.weighted_solve(g, faces, f), atol=1e-10)


def test_constant_weight_reduces_to_laplacian(rng):
    g = GridSpec(2, 32, 2.0)
    f = project_mean_zero(rng.normal(size=g.shape))
    u = weighted_solve(g, g.full(2.5), f, tol=1e-12)
    np.testing.assert_allclose(2.5 * u, inv_laplacian(g, f), atol=1e-10 * np.max(np.abs(u)))


def test_weighted_solution_satisfies_equation(rng):
    g = GridSpec(2, 24)
    w = np.exp(rng.normal(size=g.shape))
    f = project_mean_zero(rng.normal(size=g.shape))
    u = weighted_solve(g, w, f, tol=1e-11)
    assert abs(np.mean(u)) < 1e-14
    res = -weighted_divergence(g, w, u) - f
    assert np.sqrt(np.sum(res**2)) <= 1e-10 * np.sqrt(np.sum(f**2))


def test_weighted_norm_symmetric_positive(rng):
    g = GridSpec(2, 12)
    w = rng.uniform(0.5, 2.0, size=g.shape)
    f1, f2 = (project_mean_zero(rng.normal(size=g.shape)) for _ in range(2))
    a = inner_product(g, f1, weighted_solve(g, w, f2, tol=1e-13))
    b = inner_product(g, f2, weighted_solve(g, w, f1, tol=1e-13))
    assert a == pytest.approx(b, rel=1e-9)
    assert weighted_norm(g, w, f1) > 0
    assert weighted_norm(g, w, g.zeros()) == 0.0


def test_weighted_solve_errors(rng):
    g = GridSpec(2, 16)
    f = project_mean_zero(rng.normal(size=g.shape))
    with pytest.raises(ValueError):
        weighted_solve(g, g.full(-1.0), f)
    faces = (face_average(g, g.full(1.0), 0), g.zeros())
    with pytest.raises(ValueError):
        weighted_solve(g, faces, f)
    with pytest.raises(ConvergenceError) as info:
        weighted_solve(g, np.exp(3 * rng.normal(size=g.shape)), f, tol=1e-14, maxiter=3)
    assert info.value.iterations == 3
