# %% [markdown]
# # Energy dissipation and the variational structure of one step
#
# Without a fixed charge the scheme dissipates the discrete energy
# E = <n ln n + p ln p, 1> + 1/2 ||n - p||_{-1}^2 by at least the
# computed dissipation R at every step.  Each step is also the critical
# point of a convex functional, which we probe with finite differences.

# %%
import numpy as np

from pnpfd import ExperimentConfig, run_experiment
from pnpfd.grid import project_mean_zero
from pnpfd.harness import setup
from pnpfd.picard import solve_first_order_step, solve_step
from pnpfd.scheme import minimization_functional

cfg = ExperimentConfig(n_cells=32, T=0.25, fixed_charge=False, n0=0.5, p0=0.5, initial="smooth-random", seed=7)
recs = run_experiment(cfg).records
gap = [recs[m + 1].energy + recs[m + 1].R - recs[m].energy for m in range(len(recs) - 1)]
print(f"E: {recs[0].energy:.6f} -> {recs[-1].energy:.6f}")
print(f"max of E(m+1) + R(m+1) - E(m): {max(gap):.2e}")

# %% [markdown]
# Directional derivatives of the step functional vanish at the computed step
# and do not vanish at the previous state.

# %%
small = ExperimentConfig(n_cells=8, fixed_charge=False, n0=0.5, p0=0.5, initial="smooth-random", seed=8)
grid, params, s0 = setup(small)
s1, _ = solve_first_order_step(grid, s0, params)
s2, _ = solve_step(grid, s1, s0, params)
psi = project_mean_zero(np.random.default_rng(0).normal(size=grid.shape))
eps = 1e-5


def slope(n, p):
    jp = minimization_functional(grid, n + eps * psi, p, s1, s0, params)
    jm = minimization_functional(grid, n - eps * psi, p, s1, s0, params)
    return (jp - jm) / (2 * eps)


print(f"slope at the solution:       {slope(s2.n, s2.p): .3e}")
print(f"slope at the previous state: {slope(s1.n, s1.p): .3e}")
