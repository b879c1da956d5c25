"""Discrete energy, dissipation, masses and minimum concentration per step."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .elliptic import hminus1_norm
from .grid import GridSpec, face_inner_product, gradient, project_mean_zero
from .potentials import F
from .scheme import MobilityPair, SchemeParams, State, chemical_potentials

CSV_COLUMNS = ("step", "t", "energy", "mass_n", "mass_p", "c_min", "R", "picard_iters")


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    t: float
    energy: float
    mass_n: float
    mass_p: float
    c_min: float
    R: float
    picard_iters: int


def energy(grid: GridSpec, n: np.ndarray, p: np.ndarray, rho_f: np.ndarray | None = None) -> float:
    """``<n ln n + p ln p, 1> + 1/2 ||n - p - rho_f||_{-1}^2``.

    With ``rho_f = None`` this is the plain PNP energy.  With a fixed charge the
    electrostatic part uses the total charge so that its variation reproduces
    the potential of the extended Poisson problem.
    """
    entropy = grid.cell_volume * float(np.sum(F(n) + F(p)))
    q = n - p if rho_f is None else n - p - rho_f
    return entropy + 0.5 * hminus1_norm(grid, project_mean_zero(q)) ** 2


def dissipation(grid: GridSpec, nxt: State, cur: State, mob: MobilityPair, params: SchemeParams) -> float:
    """``dt ([Mn grad mu_n, grad mu_n] + [Mp grad mu_p, grad mu_p])`` for a second-order step."""
    mu_n, mu_p = chemical_potentials(grid, nxt.n, nxt.p, cur.n, cur.p, params)
    return params.dt * (_weighted_square(grid, mob.n, mu_n) + _weighted_square(grid, mob.p, mu_p))


def first_order_dissipation(grid: GridSpec, nxt: State, mob: MobilityPair, params: SchemeParams) -> float:
    """Dissipation of the bootstrap step, with ``mu = ln u + 1 -/+ phi`` at the new level."""
    mu_n = np.log(nxt.n) + 1.0 - nxt.phi
    mu_p = np.log(nxt.p) + 1.0 + nxt.phi
    return params.dt * (_weighted_square(grid, mob.n, mu_n) + _weighted_square(grid, mob.p, mu_p))


def _weighted_square(grid: GridSpec, m, mu: np.ndarray) -> float:
    g = gradient(grid, mu)
    return face_inner_product(grid, tuple(m[a] * g[a] for a in range(grid.dim)), g)


def min_concentration(n: np.ndarray, p: np.ndarray) -> float:
    return float(min(np.min(n), np.min(p)))


def masses(grid: GridSpec, n: np.ndarray, p: np.ndarray) -> tuple[float, float]:
    return float(np.mean(n)) * grid.volume, float(np.mean(p)) * grid.volume


def record(
    grid: GridSpec, state: State, params: SchemeParams, R: float = 0.0, picard_iters: int = 0
) -> DiagnosticsRecord:
    mass_n, mass_p = masses(grid, state.n, state.p)
    return DiagnosticsRecord(
        step=state.step,
        t=state.t,
        energy=energy(grid, state.n, state.p, params.rho_f),
        mass_n=mass_n,
        mass_p=mass_p,
        c_min=min_concentration(state.n, state.p),
        R=R,
        picard_iters=picard_iters,
    )


def write_csv(path: str | Path, records: list[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(rec)])


def read_csv(path: str | Path) -> list[DiagnosticsRecord]:
    types = [f.type for f in fields(DiagnosticsRecord)]
    out = []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected diagnostics header {header}")
        for row in rows:
            out.append(DiagnosticsRecord(*(int(v) if t == "int" else float(v) for v, t in zip(row, types))))
    return out
