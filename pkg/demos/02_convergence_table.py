# %% [markdown]
# # Convergence table without an exact solution
#
# Solutions at consecutive resolutions are compared on the coarser grid and
# the order is read off three meshes at a time.  Because the meshes are
# not nested, the ratio of consecutive differences is corrected by
#
#     A* = (1 - h_j^2 / h_{j-1}^2) / (1 - h_{j+1}^2 / h_j^2),
#
# which is exactly the ratio two h^2-convergent differences would have.

# %%
import os

from pnpfd import ExperimentConfig, convergence_study, richardson_order

# %% [markdown]
# Reference differences for the fixed-charge problem map to orders 1.98 and 2.00.

# %%
print(richardson_order(1.196e-4, 2.243e-5, (1 / 20, 1 / 40, 1 / 60)))
print(richardson_order(2.243e-5, 7.851e-6, (1 / 40, 1 / 60, 1 / 80)))

# %% [markdown]
# The full study (resolutions 20..100) takes a few minutes; set
# `PNPFD_FULL=1` to run it, otherwise a quick coarse version runs.

# %%
resolutions = [20, 40, 60, 80, 100] if os.environ.get("PNPFD_FULL") else [10, 15, 20]
table = convergence_study(ExperimentConfig(), resolutions)
for row in table.pairs:
    print(f"h {row['h_coarse']:.4f} -> {row['h_fine']:.4f}:  n {row['diff_n']:.3e}  "
          f"p {row['diff_p']:.3e}  phi {row['diff_phi_pinned']:.3e}")
for row in table.triples:
    print(f"A* {row['astar']:.3f}  orders n {row['order_n']:.2f}  p {row['order_p']:.2f}  "
          f"phi {row['order_phi_pinned']:.2f}")

# %% [markdown]
# `diff_phi_pinned` compares potentials that vanish in the corner cell.
# The mean-zero potential (`diff_phi`) differs from it by a constant that
# itself changes with resolution; both columns are written to the CSV.
