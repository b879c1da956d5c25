"""Assembly of the second-order positivity-preserving PNP scheme.

Unknowns are the ion concentrations ``n`` (negative species) and ``p``
(positive species) on cell centers, plus the mean-zero electric potential
``phi`` solving ``-Delta_h phi = p - n + rho_f``.  One step advances
``(n^m, p^m)`` to ``(n^{m+1}, p^{m+1})`` through

    (n^{m+1} - n^m) / dt = div_h(Mn grad_h mu_n)
    mu_n = G1(n^m, n^{m+1}) - 1 + dt ln(n^{m+1} / n^m) - phi^{m+1/2}

and the mirror image for ``p`` with ``+phi^{m+1/2}`` and diffusivity ``D``.
The face mobilities ``Mn`` are the extrapolated, regularised averages built
by :func:`extrapolated_mobility`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .elliptic import inv_laplacian
from .grid import GridSpec, face_average, face_weighted_divergence, project_mean_zero
from .potentials import G1

FaceVector = tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class SchemeParams:
    """Time step, diffusivity ratio of ``p`` and the (mean-zero) fixed charge."""

    dt: float
    D: float = 1.0
    rho_f: np.ndarray | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.D > 0:
            raise ValueError("D must be positive")
        if self.rho_f is not None:
            object.__setattr__(self, "rho_f", project_mean_zero(np.asarray(self.rho_f, dtype=float)))

    def charge(self, grid: GridSpec) -> np.ndarray:
        return grid.zeros() if self.rho_f is None else self.rho_f


@dataclass(frozen=True, eq=False)
class State:
    n: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    step: int = 0
    t: float = 0.0

    @property
    def min_concentration(self) -> float:
        return float(min(np.min(self.n), np.min(self.p)))


class MobilityPair(NamedTuple):
    n: FaceVector
    p: FaceVector


def _require_positive(*fields: np.ndarray) -> None:
    for f in fields:
        if np.any(~(f > 0)):
            raise ValueError("concentrations must be strictly positive")


def extrapolated_mobility(grid: GridSpec, m_cur: np.ndarray, m_prev: np.ndarray, dt: float) -> FaceVector:
    """``sqrt((A(3/2 M^m - 1/2 M^{m-1}))^2 + dt^6)`` on every face; never below ``dt^3``."""
    extrap = 1.5 * m_cur - 0.5 * m_prev
    return tuple(np.sqrt(face_average(grid, extrap, a) ** 2 + dt**6) for a in range(grid.dim))


def mobilities(grid: GridSpec, cur: State, prev: State, params: SchemeParams) -> MobilityPair:
    return MobilityPair(
        extrapolated_mobility(grid, cur.n, prev.n, params.dt),
        extrapolated_mobility(grid, params.D * cur.p, params.D * prev.p, params.dt),
    )


def lagged_mobilities(grid: GridSpec, state: State, params: SchemeParams) -> MobilityPair:
    """Plain face averages of the cell mobilities, used by the first-order step."""
    return MobilityPair(
        tuple(face_average(grid, state.n, a) for a in range(grid.dim)),
        tuple(face_average(grid, params.D * state.p, a) for a in range(grid.dim)),
    )


def solve_poisson(grid: GridSpec, n: np.ndarray, p: np.ndarray, rho_f: np.ndarray | None = None) -> np.ndarray:
    """Mean-zero ``phi`` with ``-Delta_h phi = p - n + rho_f`` (right side projected)."""
    charge = p - n if rho_f is None else p - n + rho_f
    return inv_laplacian(grid, project_mean_zero(charge))


def chemical_potentials(
    grid: GridSpec,
    n_next: np.ndarray,
    p_next: np.ndarray,
    n_cur: np.ndarray,
    p_cur: np.ndarray,
    params: SchemeParams,
) -> tuple[np.ndarray, np.ndarray]:
    _require_positive(n_next, p_next, n_cur, p_cur)
    dt = params.dt
    rho = params.charge(grid)
    n_mid = 0.5 * (n_next + n_cur)
    p_mid = 0.5 * (p_next + p_cur)
    # -phi^{m+1/2} and +phi^{m+1/2} of the fixed-charge Poisson problem
    elec_n = inv_laplacian(grid, project_mean_zero(n_mid - p_mid - rho))
    elec_p = inv_laplacian(grid, project_mean_zero(p_mid - n_mid + rho))
    mu_n = G1(n_cur, n_next) - 1.0 + dt * (np.log(n_next) - np.log(n_cur)) + elec_n
    mu_p = G1(p_cur, p_next) - 1.0 + dt * (np.log(p_next) - np.log(p_cur)) + elec_p
    return mu_n, mu_p


def scheme_residual(
    grid: GridSpec, nxt: State, cur: State, prev: State, params: SchemeParams
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise residuals of the two transport equations for a candidate step."""
    _require_positive(prev.n, prev.p)
    mob = mobilities(grid, cur, prev, params)
    mu_n, mu_p = chemical_potentials(grid, nxt.n, nxt.p, cur.n, cur.p, params)
    dt = params.dt
    r_n = (nxt.n - cur.n) / dt - face_weighted_divergence(grid, mob.n, mu_n)
    r_p = (nxt.p - cur.p) / dt - face_weighted_divergence(grid, mob.p, mu_p)
    return r_n, r_p


def first_order_residual(
    grid: GridSpec, nxt: State, cur: State, params: SchemeParams
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the backward-Euler bootstrap step (lagged mobility, implicit log and potential)."""
    _require_positive(nxt.n, nxt.p, cur.n, cur.p)
    mob = lagged_mobilities(grid, cur, params)
    phi = solve_poisson(grid, nxt.n, nxt.p, params.rho_f)
    dt = params.dt
    r_n = (nxt.n - cur.n) / dt - face_weighted_divergence(grid, mob.n, np.log(nxt.n) - phi)
    r_p = (nxt.p - cur.p) / dt - face_weighted_divergence(grid, mob.p, np.log(nxt.p) + phi)
    return r_n, r_p


def initial_state(grid: GridSpec, n0: np.ndarray, p0: np.ndarray, params: SchemeParams) -> State:
    n0 = np.asarray(n0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    _require_positive(n0, p0)
    return State(n0, p0, solve_poisson(grid, n0, p0, params.rho_f), 0, 0.0)


def first_order_step(grid: GridSpec, initial: State, params: SchemeParams, config=None):
    """Bootstrap step to ``t = dt``; returns ``(State, PicardReport)``."""
    from .picard import PicardConfig, solve_first_order_step

    return solve_first_order_step(grid, initial, params, config or PicardConfig())


def minimization_functional(
    grid: GridSpec, n: np.ndarray, p: np.ndarray, cur: State, prev: State, params: SchemeParams, g0=None
) -> float:
    """Convex functional whose critical point on the mass-preserving set is the scheme's solution.

    ``g0`` evaluates ``G0_a(x)`` and defaults to the closed form; pass a
    quadrature version to avoid sharing code with the scheme's own potentials.
    With a fixed charge the linear terms pick up ``-/+ (-Delta_h)^{-1} rho_f``
    so that the variation reproduces the chemical potentials exactly.
    """
    from .elliptic import weighted_norm
    from .grid import inner_product
    from .potentials import F, G0

    g0 = G0 if g0 is None else g0
    _require_positive(n, p)
    dt = params.dt
    mob = mobilities(grid, cur, prev, params)
    kinetic = (
        weighted_norm(grid, mob.n, project_mean_zero(n - cur.n), tol=1e-13) ** 2
        + weighted_norm(grid, mob.p, project_mean_zero(p - cur.p), tol=1e-13) ** 2
    ) / (2.0 * dt)
    entropy = dt * inner_product(grid, F(n) + F(p), grid.full(1.0))
    q = project_mean_zero(n - p)
    electric = 0.25 * inner_product(grid, q, inv_laplacian(grid, q))
    old = 0.5 * inv_laplacian(grid, project_mean_zero(cur.n - cur.p))
    fixed = inv_laplacian(grid, params.charge(grid))
    f_n = old - fixed - dt * np.log(cur.n)
    f_p = -old + fixed - dt * np.log(cur.p)
    lag = inner_product(grid, g0(cur.n, n) + g0(cur.p, p), grid.full(1.0))
    return kinetic + entropy + electric + lag + inner_product(grid, n, f_n) + inner_product(grid, p, f_p)
