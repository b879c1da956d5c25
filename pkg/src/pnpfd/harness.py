"""Experiment orchestration: single runs, intergrid comparison, convergence tables.

The reference experiment lives on ``(-1, 1)^2`` with uniform concentrations
``n = p = 0.01`` and a fixed charge made of four Gaussians of alternating
sign.  The mesh is selected either by the number of cells per axis or by a
*resolution* ``r`` meaning ``h = 1 / r`` (so ``r = 20`` on ``(-1, 1)^2`` is a
40 x 40 grid).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .diagnostics import DiagnosticsRecord, dissipation, first_order_dissipation, record, write_csv
from .grid import GridSpec, save_field
from .picard import PicardConfig, PicardReport, solve_first_order_step, solve_step
from .scheme import SchemeParams, State, initial_state, lagged_mobilities, mobilities

log = logging.getLogger(__name__)


class RunFailure(RuntimeError):
    """A run stopped early; carries the last accepted state."""

    def __init__(self, message: str, step: int, state: State | None):
        super().__init__(f"step {step}: {message}")
        self.step = step
        self.state = state


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 2
    n_cells: int = 40
    origin: float = -1.0
    length: float = 2.0
    T: float = 0.5
    dt: float | None = None
    dt_factor: float = 0.1
    D: float = 1.0
    fixed_charge: bool = True
    sigma: float = 0.5
    charge_amplitude: float = 100.0
    n0: float = 0.01
    p0: float = 0.01
    initial: str = "uniform"
    perturbation: float = 0.5
    seed: int = 0
    omega: float = 0.1
    eps: float = 1e-12
    tol: float = 1e-10
    max_iter: int = 500
    inner_tol: float = 1e-12
    mass_tol: float = 1e-12
    output_dir: str | None = None
    emit_fields: bool = False
    field_cadence: int = 0

    def __post_init__(self):
        if self.n_cells < 4:
            raise ValueError("need at least 4 cells per axis")
        if not self.T > 0:
            raise ValueError("final time must be positive")
        if self.initial not in INITIAL_PROFILES:
            raise ValueError(f"unknown initial profile {self.initial!r}; choose from {sorted(INITIAL_PROFILES)}")

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.dim, self.n_cells, self.length, (self.origin,) * self.dim)

    @property
    def n_steps(self) -> int:
        dt = self.dt if self.dt is not None else self.dt_factor * self.grid.h
        return max(1, math.ceil(self.T / dt - 1e-9))

    @property
    def time_step(self) -> float:
        """Requested step shrunk, if needed, so that ``T`` is hit exactly."""
        return self.T / self.n_steps

    @property
    def picard(self) -> PicardConfig:
        return PicardConfig(
            omega=self.omega, eps=self.eps, tol=self.tol, max_iter=self.max_iter, inner_tol=self.inner_tol
        )

    def with_resolution(self, resolution: int) -> ExperimentConfig:
        """Copy with ``h = 1 / resolution``."""
        cells = self.length * resolution
        if abs(cells - round(cells)) > 1e-9:
            raise ValueError(f"resolution {resolution} does not tile a domain of length {self.length}")
        return replace(self, n_cells=int(round(cells)))

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> ExperimentConfig:
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        resolution = values.get("resolution")
        for key, raw in values.items():
            if key == "resolution":
                continue
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(known[key].type, raw)
        cfg = cls(**kwargs)
        return cfg.with_resolution(int(resolution)) if resolution is not None else cfg


def _coerce(kind: str, raw):
    if not isinstance(raw, str):
        return raw
    if raw.lower() in ("none", ""):
        return None
    if kind.startswith("bool"):
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    values = parse_config(Path(path).read_text())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(values)


# -- problem data ------------------------------------------------------------

def gaussian_fixed_charge(grid: GridSpec, sigma: float = 0.5, amplitude: float = 100.0, project: bool = True):
    """Four Gaussians of alternating sign centred at ``(+-1/2, +-1/2)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if grid.dim != 2:
        raise ValueError("the four-Gaussian charge is two-dimensional")
    x, y = grid.cell_centers()

    def bump(a, b):
        return np.exp(-((x + a) ** 2 + (y + b) ** 2) / (2.0 * sigma**2))

    rho = amplitude / (sigma * np.sqrt(2.0 * np.pi)) * (
        bump(0.5, 0.5) - bump(0.5, -0.5) - bump(-0.5, 0.5) + bump(-0.5, -0.5)
    )
    return rho - np.mean(rho) if project else rho


def _uniform(cfg, grid):
    return grid.full(cfg.n0), grid.full(cfg.p0)


def _smooth_random(cfg, grid):
    """Random low-mode Fourier series, scaled to a relative amplitude of ``perturbation``."""
    rng = np.random.default_rng(cfg.seed)
    coords = [2.0 * np.pi * (c - cfg.origin) / cfg.length for c in grid.cell_centers()]

    def bump():
        f = grid.zeros()
        for _ in range(6):
            k = rng.integers(0, 4, size=grid.dim)
            if not k.any():
                continue
            phase = sum(ki * ci for ki, ci in zip(k, coords))
            f += rng.normal() * np.cos(phase) + rng.normal() * np.sin(phase)
        f -= np.mean(f)
        return cfg.perturbation * f / max(np.max(np.abs(f)), 1e-300)

    return cfg.n0 * (1.0 + bump()), cfg.p0 * (1.0 + bump())


def _manufactured(cfg, grid):
    s = [2.0 * np.pi * (c - cfg.origin) / cfg.length for c in grid.cell_centers()]
    a = cfg.perturbation
    return cfg.n0 * (1.0 + a * np.sin(s[0]) * np.cos(s[1])), cfg.p0 * (1.0 - a * np.cos(s[0]) * np.sin(s[1]))


INITIAL_PROFILES = {"uniform": _uniform, "smooth-random": _smooth_random, "manufactured": _manufactured}


def setup(cfg: ExperimentConfig) -> tuple[GridSpec, SchemeParams, State]:
    grid = cfg.grid
    rho = gaussian_fixed_charge(grid, cfg.sigma, cfg.charge_amplitude) if cfg.fixed_charge else None
    params = SchemeParams(cfg.time_step, cfg.D, rho)
    n0, p0 = INITIAL_PROFILES[cfg.initial](cfg, grid)
    return grid, params, initial_state(grid, n0, p0, params)


# -- runs --------------------------------------------------------------------

@dataclass
class RunResult:
    config: ExperimentConfig
    grid: GridSpec
    params: SchemeParams
    state: State
    records: list[DiagnosticsRecord] = field(default_factory=list)
    reports: list[PicardReport] = field(default_factory=list)

    @property
    def mass_drift(self) -> tuple[float, float]:
        first, last = self.records[0], self.records[-1]
        return (
            abs(last.mass_n - first.mass_n) / abs(first.mass_n),
            abs(last.mass_p - first.mass_p) / abs(first.mass_p),
        )


def run_experiment(cfg: ExperimentConfig, progress=None) -> RunResult:
    """Bootstrap with the first-order step, then march the second-order scheme to ``T``.

    ``progress`` is an optional callable receiving each :class:`DiagnosticsRecord`.
    Raises :class:`RunFailure` (after writing a checkpoint, if an output
    directory is configured) when a step fails or an invariant is violated.
    """
    grid, params, s0 = setup(cfg)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_metadata(out / "metadata.json", cfg)
    result = RunResult(cfg, grid, params, s0, [record(grid, s0, params)])
    if progress:
        progress(result.records[-1])

    prev, cur = None, s0
    try:
        for m in range(cfg.n_steps):
            if prev is None:
                nxt, rep = solve_first_order_step(grid, cur, params, cfg.picard)
                R = first_order_dissipation(grid, nxt, lagged_mobilities(grid, cur, params), params)
            else:
                nxt, rep = solve_step(grid, cur, prev, params, cfg.picard)
                R = dissipation(grid, nxt, cur, mobilities(grid, cur, prev, params), params)
            rec = record(grid, nxt, params, R, rep.iterations)
            if not rec.c_min > 0:
                raise RunFailure("nonpositive concentration", nxt.step, cur)
            result.records.append(rec)
            result.reports.append(rep)
            prev, cur = cur, nxt
            result.state = cur
            if progress:
                progress(rec)
            if out is not None and cfg.emit_fields and cfg.field_cadence > 0 and cur.step % cfg.field_cadence == 0:
                _dump_state(out, grid, cur, f"_{cur.step:06d}")
    except RunFailure:
        _checkpoint(out, grid, cur)
        raise
    except Exception as exc:
        _checkpoint(out, grid, cur)
        raise RunFailure(str(exc), cur.step + 1, cur) from exc

    drift = max(result.mass_drift)
    if drift > cfg.mass_tol:
        _checkpoint(out, grid, cur)
        raise RunFailure(f"relative mass drift {drift:.3e} exceeds {cfg.mass_tol:.1e}", cur.step, cur)
    if out is not None:
        write_csv(out / "diagnostics.csv", result.records)
        write_picard_csv(out / "picard.csv", result.reports)
        _dump_state(out, grid, cur, "")
    return result


PICARD_COLUMNS = (
    "step", "iterations", "update_norm", "residual_norm", "converged", "retries", "inner_iterations", "omega"
)


def write_picard_csv(path: str | Path, reports: list[PicardReport]) -> None:
    """One row per time step (step 1 is the bootstrap) with the full solver report."""
    rows = [{"step": m, **asdict(rep)} for m, rep in enumerate(reports, 1)]
    _write_rows(Path(path), PICARD_COLUMNS, rows)


def _dump_state(out: Path, grid: GridSpec, state: State, suffix: str) -> None:
    for name in ("n", "p", "phi"):
        save_field(out / f"{name}{suffix}.txt", grid, getattr(state, name))


def _checkpoint(out: Path | None, grid: GridSpec, state: State) -> None:
    if out is not None:
        _dump_state(out, grid, state, "_checkpoint")


def _write_metadata(path: Path, cfg: ExperimentConfig) -> None:
    meta = {
        "config": asdict(cfg),
        "versions": {
            "pnpfd": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "flags": {
            "energy_charge": "n - p - rho_f" if cfg.fixed_charge else "n - p",
            "potential_gauge": "mean-zero",
            "first_step": "backward Euler, lagged face-averaged mobility",
            "sweep_solver": "Jacobi-PCG on u = n*/n^k",
        },
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True))


# -- intergrid comparison ----------------------------------------------------

def _trig_matrix(fine: GridSpec, coarse: GridSpec) -> np.ndarray:
    """Rows evaluate the fine grid's trigonometric interpolant at coarse centers (1D)."""
    nf, L = fine.n, fine.length
    s = coarse.axis_centers(0)[:, None] - fine.axis_centers(0)[None, :]
    theta = 2.0 * np.pi * s / L
    kmax = (nf - 1) // 2
    acc = np.ones_like(theta)
    for k in range(1, kmax + 1):
        acc += 2.0 * np.cos(k * theta)
    if nf % 2 == 0:
        # Nyquist mode split evenly between +-N/2 keeps the interpolant real
        acc += np.cos(0.5 * nf * theta)
    return acc / nf


def _apply_separable(mats, u):
    for axis, E in enumerate(mats):
        u = np.moveaxis(np.tensordot(E, u, axes=([1], [axis])), 0, axis)
    return u


def _bilinear(fine: GridSpec, coarse: GridSpec, u: np.ndarray) -> np.ndarray:
    idx, wts = [], []
    for a in range(fine.dim):
        pos = (coarse.axis_centers(a) - fine.origin[a]) / fine.h - 0.5
        i0 = np.floor(pos).astype(int)
        idx.append(i0)
        wts.append(pos - i0)
    out = np.zeros(coarse.shape)
    for corner in np.ndindex(*(2,) * fine.dim):
        sel = np.ix_(*[(idx[a] + corner[a]) % fine.n for a in range(fine.dim)])
        w = np.ones(coarse.shape)
        for a in range(fine.dim):
            shape = [1] * fine.dim
            shape[a] = -1
            wa = wts[a] if corner[a] else 1.0 - wts[a]
            w = w * wa.reshape(shape)
        out += w * u[sel]
    return out


def restrict(fine: GridSpec, u_fine: np.ndarray, coarse: GridSpec, method: str = "fourier") -> np.ndarray:
    """Values of the fine field at the coarse cell centers (periodic)."""
    if not fine.same_domain(coarse):
        raise ValueError("grids cover different domains")
    if method == "fourier":
        return _apply_separable([_trig_matrix(fine, coarse)] * fine.dim, u_fine)
    if method == "bilinear":
        return _bilinear(fine, coarse, u_fine)
    raise ValueError(f"unknown intergrid method {method!r}")


def intergrid_linf_diff(
    coarse: GridSpec, u_coarse: np.ndarray, fine: GridSpec, u_fine: np.ndarray, method: str = "fourier"
) -> float:
    return float(np.max(np.abs(u_coarse - restrict(fine, u_fine, coarse, method))))


# -- convergence study -------------------------------------------------------

def richardson_order(d1: float, d2: float, h: tuple[float, float, float]) -> tuple[float, float]:
    """Order from three non-nested meshes, corrected by ``A*`` for the ``h^2`` difference pattern."""
    h0, h1, h2 = h
    if not (d1 > 0 and d2 > 0):
        raise ValueError("differences must be positive to define an order")
    if not h0 > h1 > h2 > 0:
        raise ValueError("mesh sizes must be strictly decreasing")
    astar = (1.0 - h1**2 / h0**2) / (1.0 - h2**2 / h1**2)
    return astar, math.log(d1 / (astar * d2)) / math.log(h0 / h1)


QUANTITIES = ("n", "p", "phi", "phi_pinned")


def _quantity(state: State, name: str) -> np.ndarray:
    if name == "phi_pinned":
        # potential gauged to vanish in the cell at the domain corner
        return state.phi - state.phi.flat[0]
    return getattr(state, name)


@dataclass
class ConvergenceTable:
    h: list[float]
    pairs: list[dict]
    triples: list[dict]
    results: list[RunResult] = field(default_factory=list, repr=False)
    complete: bool = True

    def write_csv(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        _write_rows(d / "convergence_pairs.csv", PAIR_COLUMNS, self.pairs)
        _write_rows(d / "convergence_orders.csv", TRIPLE_COLUMNS, self.triples)


PAIR_COLUMNS = ("pair", "h_coarse", "h_fine", "diff_n", "diff_p", "diff_phi", "diff_phi_pinned")
TRIPLE_COLUMNS = ("triple", "astar", "order_n", "order_p", "order_phi", "order_phi_pinned")


def _write_rows(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])


def tabulate(results: list[RunResult], method: str = "fourier") -> ConvergenceTable:
    """Pairwise differences and triple-wise orders from runs ordered coarse to fine."""
    hs = [r.grid.h for r in results]
    pairs, triples = [], []
    for j in range(len(results) - 1):
        a, b = results[j], results[j + 1]
        row = {"pair": j + 1, "h_coarse": a.grid.h, "h_fine": b.grid.h}
        for q in QUANTITIES:
            row[f"diff_{q}"] = intergrid_linf_diff(a.grid, _quantity(a.state, q), b.grid, _quantity(b.state, q), method)
        pairs.append(row)
    for j in range(len(pairs) - 1):
        d1, d2 = pairs[j], pairs[j + 1]
        row = {"triple": j + 1}
        for q in QUANTITIES:
            astar, order = richardson_order(d1[f"diff_{q}"], d2[f"diff_{q}"], (hs[j], hs[j + 1], hs[j + 2]))
            row[f"order_{q}"] = order
        row["astar"] = astar
        triples.append(row)
    return ConvergenceTable(hs, pairs, triples, results)


def convergence_study(
    base: ExperimentConfig, resolutions: list[int], method: str = "fourier", progress=None
) -> ConvergenceTable:
    """Run every resolution (``h = 1/r``) to ``base.T`` and tabulate differences and orders.

    A failed run stops the study; the partial table is returned with
    ``complete = False`` and written out if an output directory is set.
    """
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions")
    resolutions = sorted(resolutions)
    results = []
    complete = True
    for r in resolutions:
        cfg = base.with_resolution(r)
        if base.output_dir:
            cfg = replace(cfg, output_dir=str(Path(base.output_dir) / f"r{r}"))
        log.info("resolution %d: %d cells, %d steps", r, cfg.n_cells, cfg.n_steps)
        try:
            results.append(run_experiment(cfg))
        except RunFailure as exc:
            log.error("resolution %d failed: %s", r, exc)
            complete = False
            break
        if progress:
            progress(r, results[-1])
    table = tabulate(results, method) if len(results) >= 2 else ConvergenceTable([], [], [], results)
    table.complete = complete
    if base.output_dir:
        table.write_csv(base.output_dir)
    return table
