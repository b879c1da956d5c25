"""Discrete inverse Laplacian, the H^-1 norm, and weighted elliptic solves.

On a uniform periodic grid the 2nd-order Laplacian is diagonalised by the
DFT with symbol ``-(4/h^2) sum_axis sin^2(pi k_axis / N)``, so its
pseudo-inverse on mean-zero fields is a pointwise division in Fourier space.

The variable-coefficient operator ``L_g psi = -div_h(g grad_h psi)`` has no such
structure and is inverted by conjugate gradients with Jacobi scaling, projecting
out the constant mode on every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

from .grid import (
    GridSpec,
    face_average,
    face_weighted_divergence,
    inner_product,
    l2_norm,
    project_mean_zero,
)


class ConvergenceError(RuntimeError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


def _require_mean_zero(grid: GridSpec, f: np.ndarray, rtol: float = 1e-12) -> None:
    m = np.mean(f)
    scale = l2_norm(grid, f)
    if abs(m) * np.sqrt(grid.volume) > rtol * max(scale, np.finfo(float).tiny):
        raise ValueError(f"right-hand side must have zero mean (mean = {m:.3e}); project it first")


@dataclass(frozen=True)
class SpectralPoissonSolver:
    grid: GridSpec

    @cached_property
    def symbol(self) -> np.ndarray:
        """Eigenvalues of ``-Delta_h`` on the ``rfftn`` wavenumber layout."""
        g = self.grid
        lam = np.zeros([g.n] * (g.dim - 1) + [g.n // 2 + 1])
        for axis in range(g.dim):
            k = np.arange(g.n if axis < g.dim - 1 else g.n // 2 + 1)
            s = (4.0 / g.h**2) * np.sin(np.pi * k / g.n) ** 2
            shape = [1] * g.dim
            shape[axis] = -1
            lam = lam + s.reshape(shape)
        return lam

    @cached_property
    def _inv_symbol(self) -> np.ndarray:
        lam = self.symbol
        inv = np.zeros_like(lam)
        np.divide(1.0, lam, out=inv, where=lam > 0)
        return inv

    def solve(self, f: np.ndarray, check_mean: bool = True) -> np.ndarray:
        """Mean-zero ``psi`` with ``-Delta_h psi = f``."""
        if check_mean:
            _require_mean_zero(self.grid, f)
        fh = fft.rfftn(f)
        psi = fft.irfftn(fh * self._inv_symbol, s=self.grid.shape)
        return psi - np.mean(psi)


_solvers: dict[GridSpec, SpectralPoissonSolver] = {}


def poisson_solver(grid: GridSpec) -> SpectralPoissonSolver:
    """Cached solver per grid; solvers are immutable so sharing is safe."""
    s = _solvers.get(grid)
    if s is None:
        s = _solvers[grid] = SpectralPoissonSolver(grid)
    return s


def inv_laplacian(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    return poisson_solver(grid).solve(f)


def hminus1_norm(grid: GridSpec, f: np.ndarray) -> float:
    val = inner_product(grid, f, inv_laplacian(grid, f))
    return float(np.sqrt(max(val, 0.0)))


def face_weights(grid: GridSpec, g) -> tuple[np.ndarray, ...]:
    """Face weights from either a cell field (averaged) or a face vector (as is)."""
    if isinstance(g, tuple):
        return g
    return tuple(face_average(grid, g, a) for a in range(grid.dim))


def _weighted_diagonal(grid: GridSpec, m: tuple[np.ndarray, ...]) -> np.ndarray:
    diag = np.zeros(grid.shape)
    for a in range(grid.dim):
        diag += (m[a] + np.roll(m[a], 1, axis=a)) / grid.h**2
    return diag


def weighted_solve(
    grid: GridSpec,
    g,
    f: np.ndarray,
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> np.ndarray:
    """Mean-zero ``psi`` with ``-div_h(g grad_h psi) = f`` for ``g > 0``.

    ``g`` is a cell field (averaged onto faces) or a tuple of face weights.

    Raises :class:`ConvergenceError` if the relative residual does not drop
    below ``tol`` within ``maxiter`` (default ``10 N^2``) iterations.
    """
    m = face_weights(grid, g)
    if min(np.min(c) for c in m) <= 0 or (not isinstance(g, tuple) and np.min(g) <= 0):
        raise ValueError("weight must be strictly positive")
    _require_mean_zero(grid, f)
    if maxiter is None:
        maxiter = 10 * grid.n**2
    bnorm = l2_norm(grid, f)
    x = np.zeros(grid.shape)
    if bnorm == 0.0:
        return x

    def op(v):
        return -face_weighted_divergence(grid, m, v)

    dinv = 1.0 / _weighted_diagonal(grid, m)
    r = project_mean_zero(f)
    z = project_mean_zero(dinv * r)
    p = z.copy()
    rz = np.sum(r * z)
    res = bnorm
    for it in range(1, maxiter + 1):
        q = op(p)
        alpha = rz / np.sum(p * q)
        x = project_mean_zero(x + alpha * p)
        r = project_mean_zero(r - alpha * q)
        res = l2_norm(grid, r)
        if res <= tol * bnorm:
            # recompute against the true residual to guard against drift
            res = l2_norm(grid, f - op(x))
            if res <= tol * bnorm:
                return x
            r = project_mean_zero(f - op(x))
        z = project_mean_zero(dinv * r)
        rz_new = np.sum(r * z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError("weighted elliptic solve did not converge", res / bnorm, maxiter)


def weighted_norm(grid: GridSpec, g, f: np.ndarray, tol: float = 1e-10) -> float:
    """``sqrt(<f, L_g^{-1} f>)``."""
    val = inner_product(grid, f, weighted_solve(grid, g, f, tol=tol))
    return float(np.sqrt(max(val, 0.0)))
