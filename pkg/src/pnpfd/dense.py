"""Dense matrix assemblies of the grid operators, for small-grid oracles.

Everything here is built entry by entry from index loops, independently of
the ``np.roll`` stencils, so that agreement is a meaningful check.  Cost grows
like ``N^(2 dim)``; keep ``N <= 8``.
"""

from __future__ import annotations

import itertools

import numpy as np

from .grid import GridSpec


def _index(grid: GridSpec):
    cells = list(itertools.product(range(grid.n), repeat=grid.dim))
    return cells, {c: k for k, c in enumerate(cells)}


def _shift(cell, axis, step, n):
    out = list(cell)
    out[axis] = (out[axis] + step) % n
    return tuple(out)


def weighted_laplacian_matrix(grid: GridSpec, faces=None) -> np.ndarray:
    """Matrix of ``-div_h(M grad_h .)`` for face weights ``M`` (all ones when ``None``)."""
    cells, pos = _index(grid)
    K = np.zeros((grid.size, grid.size))
    h2 = grid.h**2
    for cell in cells:
        i = pos[cell]
        for a in range(grid.dim):
            up = _shift(cell, a, 1, grid.n)
            down = _shift(cell, a, -1, grid.n)
            w_up = 1.0 if faces is None else faces[a][cell]
            w_down = 1.0 if faces is None else faces[a][down]
            K[i, i] += (w_up + w_down) / h2
            K[i, pos[up]] -= w_up / h2
            K[i, pos[down]] -= w_down / h2
    return K


def cell_to_face_weights(grid: GridSpec, g: np.ndarray):
    """Arithmetic face averages ``(g[i] + g[i+1]) / 2`` by explicit loops."""
    cells, _ = _index(grid)
    faces = tuple(np.zeros(grid.shape) for _ in range(grid.dim))
    for cell in cells:
        for a in range(grid.dim):
            faces[a][cell] = 0.5 * (g[cell] + g[_shift(cell, a, 1, grid.n)])
    return faces


def solve_mean_zero(K: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Mean-zero solution of the singular system ``K u = f`` via a bordered matrix."""
    m = K.shape[0]
    B = np.zeros((m + 1, m + 1))
    B[:m, :m] = K
    B[:m, m] = 1.0
    B[m, :m] = 1.0
    rhs = np.concatenate([np.ravel(f), [0.0]])
    return np.linalg.solve(B, rhs)[:m]


def inv_laplacian(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    return solve_mean_zero(weighted_laplacian_matrix(grid), f).reshape(grid.shape)


def weighted_solve(grid: GridSpec, g, f: np.ndarray) -> np.ndarray:
    faces = g if isinstance(g, tuple) else cell_to_face_weights(grid, g)
    return solve_mean_zero(weighted_laplacian_matrix(grid, faces), f).reshape(grid.shape)


def solve_poisson(grid: GridSpec, n, p, rho_f=None) -> np.ndarray:
    q = p - n if rho_f is None else p - n + rho_f
    return inv_laplacian(grid, q - np.mean(q))


def sweep_matrix(grid: GridSpec, uk: np.ndarray, faces, c: float) -> np.ndarray:
    """Matrix of ``v -> v - c div_h(M grad_h(v / uk))`` acting on ``v = u*``."""
    return np.eye(grid.size) + c * weighted_laplacian_matrix(grid, faces) @ np.diag(1.0 / np.ravel(uk))


def divergence_matrix(grid: GridSpec, faces) -> np.ndarray:
    """Matrix of ``w -> div_h(M grad_h w)``."""
    return -weighted_laplacian_matrix(grid, faces)
