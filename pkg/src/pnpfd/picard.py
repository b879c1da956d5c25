"""Linearised relaxation iteration for the implicit step.

Each sweep freezes the current iterate ``n^k`` and solves

    n* - c div_h(M grad_h(n* / n^k)) = n^m + dt div_h(M grad_h w(n^k, phi^k))

for ``n*`` (``c = dt + dt^2``), likewise for ``p*``, then re-solves the
potential and relaxes ``x^{k+1} = omega x^k + (1 - omega) x*``.  The implicit
term vanishes at a fixed point, so fixed points are exactly the solutions of
the scheme.

Substituting ``n* = n^k u`` turns the sweep operator into
``diag(n^k) + c L_M``, which is symmetric positive definite; it is solved
matrix-free with Jacobi-preconditioned CG starting from ``u = 1`` (the fixed
point value).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .elliptic import ConvergenceError
from .grid import GridSpec, face_weighted_divergence, l2_norm
from .potentials import G1_split
from .scheme import (
    MobilityPair,
    SchemeParams,
    State,
    first_order_residual,
    lagged_mobilities,
    mobilities,
    scheme_residual,
    solve_poisson,
)

log = logging.getLogger(__name__)

_DEGENERATE = 1e3 * np.finfo(float).eps


class PicardError(RuntimeError):
    def __init__(self, message: str, report: PicardReport):
        super().__init__(f"{message}: {report}")
        self.report = report


class PositivityError(RuntimeError):
    pass


@dataclass(frozen=True)
class PicardConfig:
    omega: float = 0.1
    eps: float = 1e-12
    tol: float = 1e-10
    max_iter: int = 500
    inner_tol: float = 1e-12
    inner_max_iter: int = 5000
    residual_factor: float = 100.0
    max_retries: int = 3

    def __post_init__(self):
        if not 0.0 < self.omega < 0.99:
            # omega -> 1 freezes the iterate and fakes convergence
            raise ValueError(f"relaxation must lie in (0, 0.99), got {self.omega}")
        if not self.eps > 0 or not self.tol > 0 or not self.inner_tol > 0:
            raise ValueError("eps, tol and inner_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class PicardReport:
    iterations: int = 0
    update_norm: float = np.inf
    residual_norm: float = np.inf
    converged: bool = False
    retries: int = 0
    inner_iterations: int = 0
    omega: float = 0.0


def initial_guess(cur: State, prev: State, eps: float):
    """``max(2 x^m - x^{m-1}, eps)`` for the concentrations, plain extrapolation for ``phi``."""
    n0 = np.maximum(2.0 * cur.n - prev.n, eps)
    p0 = np.maximum(2.0 * cur.p - prev.p, eps)
    return n0, p0, 2.0 * cur.phi - prev.phi


def _solve_species(grid, uk, u_cur, mob, c, dt, w, tol, maxiter):
    """Solve ``u* - c div(M grad(u*/uk)) = u_cur + dt div(M grad w)``; returns ``(u*, iterations)``."""
    rhs = u_cur + dt * face_weighted_divergence(grid, mob, w)
    h2 = grid.h**2
    plus = [c * m / h2 for m in mob]
    minus = [np.roll(pl, 1, axis=a) for a, pl in enumerate(plus)]
    diag = uk.copy()
    for a in range(grid.dim):
        diag += plus[a] + minus[a]
    dinv = 1.0 / diag

    def apply(v):
        out = diag * v
        for a in range(grid.dim):
            out -= plus[a] * np.roll(v, -1, axis=a) + minus[a] * np.roll(v, 1, axis=a)
        return out

    bnorm = np.sqrt(np.sum(rhs * rhs))
    x = np.ones_like(uk)
    r = rhs - apply(x)
    rnorm = np.sqrt(np.sum(r * r))
    it = 0
    if rnorm > tol * bnorm:
        z = dinv * r
        p = z.copy()
        rz = np.sum(r * z)
        for it in range(1, maxiter + 1):
            q = apply(p)
            alpha = rz / np.sum(p * q)
            x += alpha * p
            r -= alpha * q
            rnorm = np.sqrt(np.sum(r * r))
            if rnorm <= tol * bnorm:
                break
            z = dinv * r
            rz_new = np.sum(r * z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        else:
            raise ConvergenceError("sweep linear solve did not converge", rnorm / bnorm, maxiter)
    # constants are in the kernel of L_M, so a shift of u fixes the mass exactly
    x += (np.sum(rhs) - np.sum(uk * x)) / np.sum(uk)
    return uk * x, it


def _log_part(cur, guess, dt):
    lead, quotient = G1_split(cur, guess, _DEGENERATE)
    return lead + quotient + dt * np.log(guess / cur)


def picard_sweep(
    grid: GridSpec,
    guess,
    cur: State,
    prev: State,
    mob: MobilityPair,
    params: SchemeParams,
    config: PicardConfig = PicardConfig(),
):
    """One linearised sweep of the second-order scheme; returns ``(n*, p*, phi*, inner iterations)``."""
    nk, pk, phik = guess
    if np.any(~(nk > 0)) or np.any(~(pk > 0)):
        raise PositivityError("Picard iterate is not strictly positive")
    dt = params.dt
    c = dt + dt * dt
    half_phi = 0.5 * (phik + cur.phi)
    wn = _log_part(cur.n, nk, dt) - half_phi
    wp = _log_part(cur.p, pk, dt) + half_phi
    n_star, it_n = _solve_species(grid, nk, cur.n, mob.n, c, dt, wn, config.inner_tol, config.inner_max_iter)
    p_star, it_p = _solve_species(grid, pk, cur.p, mob.p, c, dt, wp, config.inner_tol, config.inner_max_iter)
    return n_star, p_star, solve_poisson(grid, n_star, p_star, params.rho_f), it_n + it_p


def first_order_sweep(grid: GridSpec, guess, cur: State, mob: MobilityPair, params: SchemeParams, config: PicardConfig):
    nk, pk, phik = guess
    if np.any(~(nk > 0)) or np.any(~(pk > 0)):
        raise PositivityError("Picard iterate is not strictly positive")
    dt = params.dt
    n_star, it_n = _solve_species(grid, nk, cur.n, mob.n, dt, dt, np.log(nk) - phik, config.inner_tol, config.inner_max_iter)
    p_star, it_p = _solve_species(grid, pk, cur.p, mob.p, dt, dt, np.log(pk) + phik, config.inner_tol, config.inner_max_iter)
    return n_star, p_star, solve_poisson(grid, n_star, p_star, params.rho_f), it_n + it_p


def _iterate(sweep, guess, omega, config, report, accept):
    """Relaxed sweeps until the update is below ``tol`` and ``accept`` passes."""
    nk, pk, phik = guess
    for k in range(1, config.max_iter + 1):
        n_star, p_star, phi_star, inner = sweep((nk, pk, phik))
        report.inner_iterations += inner
        n_new = omega * nk + (1.0 - omega) * n_star
        p_new = omega * pk + (1.0 - omega) * p_star
        phi_new = omega * phik + (1.0 - omega) * phi_star
        if np.any(~(n_new > 0)) or np.any(~(p_new > 0)):
            raise PositivityError(f"nonpositive concentration in Picard iterate {k}")
        scale = max(np.max(np.abs(nk)), np.max(np.abs(pk)))
        update = max(np.max(np.abs(n_new - nk)), np.max(np.abs(p_new - pk))) / scale
        nk, pk, phik = n_new, p_new, phi_new
        report.iterations = k
        report.update_norm = float(update)
        if update <= config.tol:
            state, residual = accept(nk, pk)
            report.residual_norm = residual
            if residual <= config.residual_factor * config.tol:
                report.converged = True
                return state
    raise PicardError("Picard iteration did not converge", report)


def _relaxed_solve(sweep, guess, config, residual, make_state):
    def accept(n, p):
        state = make_state(n, p)
        return state, residual(state)

    omega = config.omega
    for attempt in range(config.max_retries + 1):
        report = PicardReport(retries=attempt, omega=omega)
        try:
            state = _iterate(sweep, guess, omega, config, report, accept)
        except PositivityError as exc:
            if attempt == config.max_retries:
                raise
            omega = (1.0 + omega) / 2.0
            log.warning("%s; retrying with omega=%.4f", exc, omega)
            continue
        if state.min_concentration <= 0:
            raise PositivityError("accepted step has a nonpositive concentration")
        return state, report


def solve_step(
    grid: GridSpec, cur: State, prev: State, params: SchemeParams, config: PicardConfig = PicardConfig()
) -> tuple[State, PicardReport]:
    """Advance ``cur`` one second-order step, using ``prev`` for extrapolation.

    Raises :class:`PicardError` when the iteration fails to converge within
    ``config.max_iter`` sweeps and :class:`PositivityError` when every
    relaxation retry produces a nonpositive iterate.
    """
    mob = mobilities(grid, cur, prev, params)
    guess = initial_guess(cur, prev, config.eps)

    def make_state(n, p):
        return State(n, p, solve_poisson(grid, n, p, params.rho_f), cur.step + 1, cur.t + params.dt)

    return _relaxed_solve(
        lambda g: picard_sweep(grid, g, cur, prev, mob, params, config),
        guess,
        config,
        lambda s: max(l2_norm(grid, r) for r in scheme_residual(grid, s, cur, prev, params)),
        make_state,
    )


def solve_first_order_step(
    grid: GridSpec, initial: State, params: SchemeParams, config: PicardConfig = PicardConfig()
) -> tuple[State, PicardReport]:
    """Backward-Euler bootstrap from ``initial``, solved with the same relaxed sweeps."""
    mob = lagged_mobilities(grid, initial, params)

    def make_state(n, p):
        return State(n, p, solve_poisson(grid, n, p, params.rho_f), initial.step + 1, initial.t + params.dt)

    return _relaxed_solve(
        lambda g: first_order_sweep(grid, g, initial, mob, params, config),
        (initial.n, initial.p, initial.phi),
        config,
        lambda s: max(l2_norm(grid, r) for r in first_order_residual(grid, s, initial, params)),
        make_state,
    )
