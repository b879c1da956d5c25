import numpy as np
import pytest

from pnpfd import dense
from pnpfd.grid import GridSpec, l2_norm, project_mean_zero
from pnpfd.harness import ExperimentConfig, setup
from pnpfd.picard import (
    PicardConfig,
    PicardError,
    PositivityError,
    _log_part,
    _relaxed_solve,
    initial_guess,
    picard_sweep,
    solve_first_order_step,
    solve_step,
)
from pnpfd.scheme import SchemeParams, State, initial_state, mobilities, scheme_residual


@pytest.fixture(scope="module")
def reference_steps():
    """Initial state and bootstrap step of the fixed-charge problem on a 20 x 20 grid."""
    grid, params, s0 = setup(ExperimentConfig(n_cells=20))
    s1, _ = solve_first_order_step(grid, s0, params)
    return grid, params, s0, s1


@pytest.mark.parametrize("omega", [0.0, 0.99, 1.0, -0.5])
def test_config_rejects_bad_relaxation(omega):
    with pytest.raises(ValueError):
        PicardConfig(omega=omega)


def test_initial_guess_is_floored():
    g = GridSpec(2, 4)
    cur = State(g.full(1e-3), g.full(1.0), g.zeros())
    prev = State(g.full(1.0), g.full(1.0), g.zeros())
    n0, p0, _ = initial_guess(cur, prev, 1e-12)
    assert np.all(n0 == 1e-12) and np.all(p0 == 1.0)


def test_uniform_state_is_fixed_point():
    g = GridSpec(2, 8)
    params = SchemeParams(0.01)
    s = initial_state(g, g.full(0.2), g.full(0.2), params)
    n_star, p_star, _, _ = picard_sweep(g, (s.n, s.p, s.phi), s, s, mobilities(g, s, s, params), params)
    np.testing.assert_allclose(n_star, s.n, rtol=1e-15)
    nxt, rep = solve_step(g, s, s, params)
    assert rep.converged and rep.iterations == 1
    np.testing.assert_allclose(nxt.n, s.n, rtol=1e-15)


def test_sweep_matches_dense_assembly(reference_steps):
    grid, params, s0, s1 = reference_steps
    mob = mobilities(grid, s1, s0, params)
    guess = initial_guess(s1, s0, 1e-12)
    n_star, p_star, _, _ = picard_sweep(grid, guess, s1, s0, mob, params)
    dt = params.dt
    c = dt + dt * dt
    half_phi = 0.5 * (guess[2] + s1.phi)
    for u_star, uk, u_cur, m, w in (
        (n_star, guess[0], s1.n, mob.n, _log_part(s1.n, guess[0], dt) - half_phi),
        (p_star, guess[1], s1.p, mob.p, _log_part(s1.p, guess[1], dt) + half_phi),
    ):
        rhs = np.ravel(u_cur) + dt * dense.divergence_matrix(grid, m) @ np.ravel(w)
        want = np.linalg.solve(dense.sweep_matrix(grid, uk, m, c), rhs).reshape(grid.shape)
        assert np.max(np.abs(u_star - want)) <= 1e-8 * np.max(np.abs(want))
        # both operator terms are divergences, so the mean is that of u^m
        assert abs(np.mean(u_star) - np.mean(u_cur)) <= 1e-12 * np.mean(u_cur)


def test_accepted_step_satisfies_scheme(reference_steps):
    grid, params, s0, s1 = reference_steps
    config = PicardConfig()
    s2, rep = solve_step(grid, s1, s0, params, config)
    assert rep.converged and rep.retries == 0
    assert s2.min_concentration > 0 and s2.step == 2
    res = max(l2_norm(grid, r) for r in scheme_residual(grid, s2, s1, s0, params))
    assert res == pytest.approx(rep.residual_norm)
    assert res <= 100 * config.tol


def test_tighter_tolerance_shrinks_residual(reference_steps):
    grid, params, s0, s1 = reference_steps
    _, loose = solve_step(grid, s1, s0, params, PicardConfig(tol=1e-8))
    _, tight = solve_step(grid, s1, s0, params, PicardConfig(tol=1e-10))
    assert tight.residual_norm <= 0.5 * loose.residual_norm
    assert tight.iterations > loose.iterations


def test_iteration_cap_raises_with_report(reference_steps):
    grid, params, s0, s1 = reference_steps
    with pytest.raises(PicardError) as info:
        solve_step(grid, s1, s0, params, PicardConfig(max_iter=2))
    assert info.value.report.iterations == 2 and not info.value.report.converged


def test_bootstrap_residual(reference_steps):
    grid, params, s0, s1 = reference_steps
    from pnpfd.scheme import first_order_residual

    assert max(l2_norm(grid, r) for r in first_order_residual(grid, s1, s0, params)) <= 1e-8
    assert abs(np.mean(s1.n) - 0.01) <= 1e-15


def _oscillating_sweep(target):
    """Toy sweep whose undamped update overshoots to negative values."""

    def sweep(guess):
        nk, pk, phik = guess
        return target - 1.5 * (nk - target), target - 1.5 * (pk - target), phik, 0

    return sweep


def test_positivity_retry_increases_damping():
    target = np.ones((4, 4))
    guess = (1.9 * target, 1.9 * target, np.zeros((4, 4)))
    make = lambda n, p: State(n, p, np.zeros_like(n))
    state, rep = _relaxed_solve(_oscillating_sweep(target), guess, PicardConfig(omega=0.1), lambda s: 0.0, make)
    assert rep.retries == 1 and rep.omega == pytest.approx(0.55)
    np.testing.assert_allclose(state.n, target, rtol=1e-9)


def test_positivity_failure_after_retries():
    target = np.ones((4, 4))
    guess = (1.9 * target, 1.9 * target, np.zeros((4, 4)))
    make = lambda n, p: State(n, p, np.zeros_like(n))
    with pytest.raises(PositivityError):
        _relaxed_solve(_oscillating_sweep(target), guess, PicardConfig(omega=0.1, max_retries=0), lambda s: 0.0, make)


def test_stationarity_of_functional(reference_steps):
    grid, params, s0, s1 = reference_steps
    from pnpfd.scheme import minimization_functional

    s2, _ = solve_step(grid, s1, s0, params)
    rng = np.random.default_rng(3)
    psi = project_mean_zero(rng.normal(size=grid.shape))
    eps = 1e-3 * np.min(s2.n) / np.max(np.abs(psi))
    jp = minimization_functional(grid, s2.n + eps * psi, s2.p, s1, s0, params)
    jm = minimization_functional(grid, s2.n - eps * psi, s2.p, s1, s0, params)
    deriv = (jp - jm) / (2 * eps)
    # compare against a direction that does change the functional at first order
    jp0 = minimization_functional(grid, s1.n + eps * psi, s1.p, s1, s0, params)
    jm0 = minimization_functional(grid, s1.n - eps * psi, s1.p, s1, s0, params)
    assert abs(deriv) <= 1e-4 * abs((jp0 - jm0) / (2 * eps))
