# %% [markdown]
# # Node churn in the storage community
#
# Nodes arrive as a Poisson process with rate N/T and leave after an
# exponential lifetime of mean T. The count of live nodes is an M/M/inf
# chain whose stationary law is Poisson(N).

# %%
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from d2dcache import generate_trajectory, steady_state_pmf

QUICK = bool(os.environ.get("D2DCACHE_QUICK"))
OUT = os.environ.get("D2DCACHE_OUT", ".")

N, T = 100, 10.0
horizon = (50 if QUICK else 2000) * T
tr = generate_trajectory(N, T, horizon, seed=1)
print("initial population:", tr.initial_count)
print("time-averaged population:", round(tr.time_average(), 2))

# %% [markdown]
# One realization of the population over the first 200 time units.

# %%
mask = tr.times < 200
fig, ax = plt.subplots(figsize=(7, 3))
ax.step(tr.times[mask], tr.counts()[mask], where="post", lw=0.8)
ax.axhline(N, color="k", ls=":")
ax.set_xlabel("time")
ax.set_ylabel("nodes")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "population_trajectory.png"), dpi=120)

# %% [markdown]
# Fraction of time spent at each count against the Poisson(N) pmf.

# %%
occ = tr.occupancy()
support = np.arange(max(occ) + 30)
empirical = np.array([occ.get(i, 0.0) for i in support])
theory = np.array([steady_state_pmf(N, int(i)) for i in support])
print("total variation distance:", round(0.5 * np.abs(empirical - theory).sum(), 4))

fig, ax = plt.subplots(figsize=(7, 3))
ax.bar(support, empirical, width=1.0, alpha=0.5, label="simulated")
ax.plot(support, theory, "k-", label="Poisson(N)")
ax.set_xlim(N - 45, N + 45)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "population_histogram.png"), dpi=120)

# %% [markdown]
# Redundant caching breaks down only when fewer than two nodes remain,
# which is negligible already for moderate N.

# %%
from d2dcache import prob_fewer_than

for n in (2, 5, 10, 20, 50):
    print(f"N={n:3d}  P(fewer than 2 nodes) = {prob_fewer_than(n, 2):.3e}")
