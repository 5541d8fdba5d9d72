# %% [markdown]
# # Closed-form energy costs and the decision rule
#
# Costs are energy per time unit; a D2D transfer of the file costs 1 and a
# base-station transfer costs R.

# %%
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from d2dcache import SystemParams, best_policy, cost_2rep, cost_bs_only, cost_mbr, cost_simple
from d2dcache.analytic import threshold_for_load

OUT = os.environ.get("D2DCACHE_OUT", ".")

p = SystemParams(R=5, N=100, omega=0.5, T=0.02)
print("base station only:", cost_bs_only(p))
print("simple caching:   ", cost_simple(p))
print("2-replication:    ", cost_2rep(p))
for k in (2, 3, 4, 8):
    print(f"MBR k={k}:         ", round(cost_mbr(p, k), 3))

# %% [markdown]
# Replication wins over simple caching once R exceeds 3 + 2/(N*omega*T).
# Below R = 3 it never does.

# %%
load = np.geomspace(0.05, 100, 200)
threshold = [threshold_for_load(x) for x in load]
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.fill_between(load, 1, threshold, color="tab:red", alpha=0.3, label="simple caching")
ax.plot(load, threshold, "k-")
ax.set_xscale("log")
ax.set_ylim(1, 15)
ax.set_xlabel("expected requests per node lifetime")
ax.set_ylabel("cost ratio R")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "decision_boundary.png"), dpi=120)

# %% [markdown]
# Best method on a few points around the boundary. Ties go to the method
# that stores fewer copies.

# %%
for R in (2, 4.9, 5, 5.1, 10):
    policy, cost = best_policy(SystemParams(R, 100, 0.5, 0.02), k_max=8)
    print(f"R={R:5}: {type(policy).__name__:<15} {cost:.2f}")
