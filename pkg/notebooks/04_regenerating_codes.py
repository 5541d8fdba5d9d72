# %% [markdown]
# # Regenerating codes versus 2-replication
#
# A (k+1, k, k) MBR code stores a block of size 2/(k+1) on each of k+1
# nodes. Each holder departure costs a repair of 2/(k+1), so the repair
# traffic per time unit is 2/T for every k. Downloads cost 2k/(k+1), which
# grows with k, so k = 1 (plain replication) is cheapest.

# %%
import os

import numpy as np

from d2dcache import MbrRegenerating, SimConfig, SystemParams, cost_mbr, mbr_params, run_replicated

QUICK = bool(os.environ.get("D2DCACHE_QUICK"))

for k in (1, 2, 3, 4, 8):
    c = mbr_params(k)
    print(f"k={k}: n={c.n} block={c.alpha:.3f} repair={c.gamma:.3f} download={c.retrieval:.3f}")

# %% [markdown]
# Simulated repair traffic and total cost at N=100, omega=0.5, T=0.02.

# %%
p = SystemParams(5, 100, 0.5, 0.02)
cfg = SimConfig(horizon_multiplier=50 if QUICK else 2000, seed=11, replications=2 if QUICK else 20)
print(f"{'k':>2} {'repair/time':>12} {'total sim':>10} {'total theory':>13}")
for k in (1, 2, 4, 8):
    s = run_replicated(p, MbrRegenerating(k), cfg)
    repair = np.mean([r.cost.repair_energy / r.cost.horizon for r in s.runs])
    print(f"{k:>2} {repair:12.2f} {s.mean_rate:10.2f} {cost_mbr(p, k):13.2f}")
