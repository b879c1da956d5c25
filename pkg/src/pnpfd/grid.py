"""Periodic cell-centered grids and the staggered finite-difference calculus.

Cell-centered fields are plain ``numpy`` arrays of shape ``(N,) * dim``.
A face field along ``axis`` has the same shape; entry ``i`` along that axis
holds the value at the face ``i + 1/2``.  A face vector is a tuple with one
face field per axis.

All operators use periodic wrap via :func:`numpy.roll`, so no ghost layers
are needed.  Every function is pure and never mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic tensor-product grid with ``n`` cells per axis.

    The domain is the box ``origin + [0, length]^dim``; the spacing is
    ``h = length / n`` on every axis.
    """

    dim: int
    n: int
    length: float = 1.0
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 2:
            raise ValueError(f"need at least 2 cells per axis, got {self.n}")
        if not self.length > 0:
            raise ValueError("length must be positive")
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * self.dim)
        elif len(self.origin) != self.dim:
            raise ValueError("origin must have one entry per axis")
        else:
            object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.n) + 0.5) * self.h

    def cell_centers(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays (``indexing="ij"``) of all cell centers."""
        return tuple(np.meshgrid(*(self.axis_centers(a) for a in range(self.dim)), indexing="ij"))

    def face_centers(self, axis: int) -> tuple[np.ndarray, ...]:
        """Coordinates of the faces staggered by ``h/2`` along ``axis``."""
        coords = [self.axis_centers(a) for a in range(self.dim)]
        coords[axis] = coords[axis] + 0.5 * self.h
        return tuple(np.meshgrid(*coords, indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    def same_domain(self, other: GridSpec) -> bool:
        return (
            self.dim == other.dim
            and np.isclose(self.length, other.length)
            and np.allclose(self.origin, other.origin)
        )


def _check(grid: GridSpec, *fields: np.ndarray) -> None:
    for f in fields:
        if np.shape(f) != grid.shape:
            raise ValueError(f"field shape {np.shape(f)} does not match grid {grid.shape}")


# -- cell -> face ------------------------------------------------------------

def face_average(grid: GridSpec, f: np.ndarray, axis: int) -> np.ndarray:
    """``A f`` at ``i+1/2``: ``(f[i+1] + f[i]) / 2``."""
    return 0.5 * (np.roll(f, -1, axis=axis) + f)


def face_difference(grid: GridSpec, f: np.ndarray, axis: int) -> np.ndarray:
    """``D f`` at ``i+1/2``: ``(f[i+1] - f[i]) / h``."""
    return (np.roll(f, -1, axis=axis) - f) / grid.h


# -- face -> cell ------------------------------------------------------------

def cell_average(grid: GridSpec, fx: np.ndarray, axis: int) -> np.ndarray:
    """``a f`` at ``i``: ``(f[i+1/2] + f[i-1/2]) / 2``."""
    return 0.5 * (fx + np.roll(fx, 1, axis=axis))


def cell_difference(grid: GridSpec, fx: np.ndarray, axis: int) -> np.ndarray:
    """``d f`` at ``i``: ``(f[i+1/2] - f[i-1/2]) / h``."""
    return (fx - np.roll(fx, 1, axis=axis)) / grid.h


# -- vector calculus ---------------------------------------------------------

def gradient(grid: GridSpec, phi: np.ndarray) -> tuple[np.ndarray, ...]:
    return tuple(face_difference(grid, phi, a) for a in range(grid.dim))


def divergence(grid: GridSpec, v: tuple[np.ndarray, ...]) -> np.ndarray:
    """Cell divergence of a face vector, accumulated axis by axis."""
    if len(v) != grid.dim:
        raise ValueError("face vector needs one component per axis")
    out = cell_difference(grid, v[0], 0)
    for a in range(1, grid.dim):
        out = out + cell_difference(grid, v[a], a)
    return out


def laplacian(grid: GridSpec, phi: np.ndarray) -> np.ndarray:
    return divergence(grid, gradient(grid, phi))


def weighted_flux(grid: GridSpec, g: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, ...]:
    """Face vector ``(A_x g * D_x phi, ...)``."""
    return tuple(face_average(grid, g, a) * face_difference(grid, phi, a) for a in range(grid.dim))


def weighted_divergence(grid: GridSpec, g: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``div_h(g grad_h phi)`` with the weight averaged onto faces."""
    return divergence(grid, weighted_flux(grid, g, phi))


def face_weighted_divergence(grid: GridSpec, m: tuple[np.ndarray, ...], phi: np.ndarray) -> np.ndarray:
    """Same as :func:`weighted_divergence` but with a weight given directly on faces."""
    return divergence(grid, tuple(m[a] * face_difference(grid, phi, a) for a in range(grid.dim)))


# -- inner products and norms ------------------------------------------------

def inner_product(grid: GridSpec, f: np.ndarray, g: np.ndarray) -> float:
    return float(grid.cell_volume * np.sum(f * g))


def face_inner_product(grid: GridSpec, u: tuple[np.ndarray, ...], v: tuple[np.ndarray, ...]) -> float:
    """``[u, v]``: sum over axes of ``<a(u v), 1>``."""
    total = 0.0
    for a in range(grid.dim):
        total += grid.cell_volume * np.sum(cell_average(grid, u[a] * v[a], a))
    return float(total)


def l2_norm(grid: GridSpec, f: np.ndarray) -> float:
    return float(np.sqrt(inner_product(grid, f, f)))


def linf_norm(f: np.ndarray) -> float:
    return float(np.max(np.abs(f)))


def grad_norm(grid: GridSpec, f: np.ndarray) -> float:
    g = gradient(grid, f)
    return float(np.sqrt(face_inner_product(grid, g, g)))


def h1_norm(grid: GridSpec, f: np.ndarray) -> float:
    return float(np.sqrt(l2_norm(grid, f) ** 2 + grad_norm(grid, f) ** 2))


def mean(f: np.ndarray) -> float:
    """Domain average ``h^d sum(f) / |Omega|``, which on a uniform grid is the plain mean."""
    return float(np.mean(f))


def project_mean_zero(f: np.ndarray) -> np.ndarray:
    out = f - np.mean(f)
    # a second pass removes the rounding residue of the first
    return out - np.mean(out)


# -- text dump ---------------------------------------------------------------

def save_field(path: str | Path, grid: GridSpec, f: np.ndarray) -> None:
    """Write a field as ``dim N h origin... length`` then one value per line."""
    _check(grid, f)
    header = " ".join(
        [str(grid.dim), str(grid.n), repr(grid.h), *(repr(o) for o in grid.origin), repr(grid.length)]
    )
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for v in np.ravel(f, order="C"):
            fh.write(f"{v:.17g}\n")


def load_field(path: str | Path) -> tuple[GridSpec, np.ndarray]:
    with open(path) as fh:
        head = fh.readline().split()
        dim, n = int(head[0]), int(head[1])
        origin = tuple(float(x) for x in head[3 : 3 + dim])
        length = float(head[3 + dim])
        values = np.loadtxt(fh, dtype=float, ndmin=1)
    grid = GridSpec(dim, n, length, origin)
    if values.size != grid.size:
        raise ValueError(f"expected {grid.size} values, found {values.size}")
    return grid, values.reshape(grid.shape)
