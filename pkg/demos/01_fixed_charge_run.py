# %% [markdown]
# # Fixed-charge run on (-1, 1)^2
#
# Two ion species start uniform at 0.01 and are pulled apart by four
# Gaussian fixed charges of alternating sign.  Concentrations near the
# charges drop by orders of magnitude, which is the regime where a
# positivity-preserving scheme earns its keep.

# %%
import numpy as np

from pnpfd import ExperimentConfig, run_experiment
from pnpfd.harness import gaussian_fixed_charge

cfg = ExperimentConfig().with_resolution(20)  # h = 1/20, 40 x 40 cells
print(f"{cfg.n_cells} cells per axis, dt = {cfg.time_step:.4g}, {cfg.n_steps} steps")

# %% [markdown]
# The fixed charge, sampled at cell centres.

# %%
rho = gaussian_fixed_charge(cfg.grid)
print(f"rho_f range [{rho.min():.2f}, {rho.max():.2f}], mean {rho.mean():.1e}")

# %% [markdown]
# March to T = 0.5.  The first step is backward Euler; the rest use the
# second-order scheme.

# %%
result = run_experiment(cfg)
recs = result.records
print(" step      t        energy          C_min     iters")
for r in recs[:: len(recs) // 10]:
    print(f"{r.step:5d}  {r.t:6.3f}  {r.energy: .10e}  {r.c_min:.3e}  {r.picard_iters:5d}")

# %% [markdown]
# Mass is conserved to rounding, the energy never increases and the
# minimum concentration stays positive even after it falls far below the
# initial 0.01.

# %%
E = np.array([r.energy for r in recs])
print("relative mass drift (n, p):", result.mass_drift)
print("largest energy increase:", np.diff(E).max())
print("smallest concentration:", min(r.c_min for r in recs))
