"""Fast invariant checks on small grids, run by ``pnpfd check``.

Each check returns ``(name, passed, detail)``; none of them takes more than a
fraction of a second.
"""

from __future__ import annotations

import numpy as np

from . import dense
from .elliptic import inv_laplacian, weighted_solve
from .grid import GridSpec, divergence, face_inner_product, gradient, inner_product, laplacian, project_mean_zero
from .picard import PicardConfig, _solve_species, solve_step
from .potentials import G1, G2, F
from .scheme import SchemeParams, initial_state, solve_poisson


def _rng(seed):
    return np.random.default_rng(seed)


def check_laplacian_bitwise(seed=0):
    grid = GridSpec(2, 16)
    f = _rng(seed).normal(size=grid.shape)
    ok = np.array_equal(laplacian(grid, f), divergence(grid, gradient(grid, f)))
    return "laplacian equals div(grad) bitwise", ok, ""


def check_summation_by_parts(seed=0):
    grid = GridSpec(2, 16, 2.0)
    rng = _rng(seed)
    f = rng.normal(size=grid.shape)
    v = tuple(rng.normal(size=grid.shape) for _ in range(2))
    lhs = inner_product(grid, f, divergence(grid, v))
    rhs = -face_inner_product(grid, gradient(grid, f), v)
    err = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return "summation by parts", bool(err <= 1e-12), f"rel err {err:.2e}"


def check_inverse_roundtrip(seed=0):
    grid = GridSpec(3, 12)
    f = project_mean_zero(_rng(seed).normal(size=grid.shape))
    err = np.max(np.abs(-laplacian(grid, inv_laplacian(grid, f)) - f)) / np.max(np.abs(f))
    return "inverse laplacian roundtrip", bool(err <= 1e-12), f"rel err {err:.2e}"


def check_energy_difference(seed=0):
    rng = _rng(seed)
    a = rng.uniform(0.01, 2.0, size=1000)
    x = rng.uniform(0.01, 2.0, size=1000)
    lhs = np.sum((x - a) * G1(a, x))
    rhs = np.sum(F(x) - F(a))
    err = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return "G1 energy-difference identity", bool(err <= 1e-12), f"rel err {err:.2e}"


def check_g_properties(seed=0):
    rng = _rng(seed)
    a = 10.0 ** rng.uniform(-4, 1, size=10_000)
    x = 10.0 ** rng.uniform(-4, 1, size=10_000)
    ok = bool(np.all(G2(a, x) >= 0))
    return "G2 nonnegative", ok, ""


def check_dense_oracles(seed=0):
    grid = GridSpec(2, 4)
    rng = _rng(seed)
    f = project_mean_zero(rng.normal(size=grid.shape))
    g = rng.uniform(0.5, 2.0, size=grid.shape)
    errs = [
        np.max(np.abs(inv_laplacian(grid, f) - dense.inv_laplacian(grid, f))),
        np.max(np.abs(weighted_solve(grid, g, f, tol=1e-14) - dense.weighted_solve(grid, g, f))),
    ]
    n, p = rng.uniform(0.5, 1.5, size=(2, *grid.shape))
    errs.append(np.max(np.abs(solve_poisson(grid, n, p) - dense.solve_poisson(grid, n, p))))
    uk = rng.uniform(0.5, 1.5, size=grid.shape)
    faces = tuple(rng.uniform(0.5, 1.5, size=grid.shape) for _ in range(2))
    w = rng.normal(size=grid.shape)
    u_cur = rng.uniform(0.5, 1.5, size=grid.shape)
    c, dt = 0.02, 0.01
    got, _ = _solve_species(grid, uk, u_cur, faces, c, dt, w, 1e-14, 1000)
    rhs = np.ravel(u_cur) + dt * dense.divergence_matrix(grid, faces) @ np.ravel(w)
    want = np.linalg.solve(dense.sweep_matrix(grid, uk, faces, c), rhs).reshape(grid.shape)
    errs.append(np.max(np.abs(got - want)))
    err = max(errs)
    return "N=4 dense oracles", bool(err <= 1e-8), f"max err {err:.2e}"


def check_stationary_step():
    grid = GridSpec(2, 8)
    params = SchemeParams(0.01)
    s = initial_state(grid, grid.full(0.3), grid.full(0.3), params)
    nxt, rep = solve_step(grid, s, s, params, PicardConfig())
    dev = max(np.max(np.abs(nxt.n - s.n)), np.max(np.abs(nxt.p - s.p))) / 0.3
    ok = rep.converged and rep.iterations == 1 and dev <= 1e-14
    return "uniform state is a fixed point", bool(ok), f"{rep.iterations} iterations, rel dev {dev:.1e}"


CHECKS = (
    check_laplacian_bitwise,
    check_summation_by_parts,
    check_inverse_roundtrip,
    check_energy_difference,
    check_g_properties,
    check_dense_oracles,
    check_stationary_step,
)


def run_checks():
    return [chk() for chk in CHECKS]
