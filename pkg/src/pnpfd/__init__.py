"""Positivity-preserving second-order finite differences for Poisson-Nernst-Planck."""

__version__ = "0.1.0"

from .grid import GridSpec, load_field, save_field  # noqa: E402
from .scheme import SchemeParams, State, initial_state  # noqa: E402
from .picard import PicardConfig, PicardReport, solve_first_order_step, solve_step  # noqa: E402
from .diagnostics import DiagnosticsRecord, energy  # noqa: E402
from .harness import (  # noqa: E402
    ExperimentConfig,
    convergence_study,
    gaussian_fixed_charge,
    intergrid_linf_diff,
    richardson_order,
    run_experiment,
)

__all__ = [
    "GridSpec",
    "load_field",
    "save_field",
    "SchemeParams",
    "State",
    "initial_state",
    "PicardConfig",
    "PicardReport",
    "solve_step",
    "solve_first_order_step",
    "DiagnosticsRecord",
    "energy",
    "ExperimentConfig",
    "run_experiment",
    "convergence_study",
    "gaussian_fixed_charge",
    "intergrid_linf_diff",
    "richardson_order",
]
