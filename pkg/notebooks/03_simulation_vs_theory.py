# %% [markdown]
# # Simulated costs against the closed forms
#
# Each point averages independent replications over 2000 mean lifetimes.
# Set ``D2DCACHE_QUICK=1`` for a short smoke run.

# %%
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from d2dcache import Replication2, SimConfig, SimpleCaching, SystemParams, analytic_rate, run_replicated

QUICK = bool(os.environ.get("D2DCACHE_QUICK"))
OUT = os.environ.get("D2DCACHE_OUT", ".")
cfg = SimConfig(horizon_multiplier=50 if QUICK else 2000, seed=5, replications=2 if QUICK else 20)
policies = {"simple caching": SimpleCaching(), "2-replication": Replication2()}


def sweep(make_params, values):
    out = {}
    for name, policy in policies.items():
        rows = []
        for v in values:
            p = make_params(v)
            s = run_replicated(p, policy, cfg)
            rows.append((analytic_rate(p, policy), s.mean_rate, s.stderr))
        out[name] = np.array(rows)
    return out


def plot(values, results, xlabel, fname, logx=False):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for (name, rows), color in zip(results.items(), ("tab:red", "tab:blue")):
        ax.plot(values, rows[:, 0], "-", color=color, label=f"{name} (theory)")
        ax.errorbar(values, rows[:, 1], yerr=2 * rows[:, 2], fmt="o", color=color, ms=4)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("energy per time unit")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(OUT, fname), dpi=120)


# %% [markdown]
# Cost against R at N=100, omega=0.5, T=0.02. Simple caching grows
# linearly in R; replication does not depend on it. They cross at R = 5.

# %%
R_values = np.arange(1, 11)
res_R = sweep(lambda R: SystemParams(float(R), 100, 0.5, 0.02), R_values)
plot(R_values, res_R, "cost ratio R", "cost_vs_R.png")
for R, a, b in zip(R_values, res_R["simple caching"][:, 1], res_R["2-replication"][:, 1]):
    print(f"R={R:2d}  simple {a:7.2f}  2-rep {b:7.2f}")

# %% [markdown]
# Cost against the mean population N at R=5.

# %%
N_values = np.array([20, 50, 100, 200, 400])
res_N = sweep(lambda N: SystemParams(5, float(N), 0.5, 0.02), N_values)
plot(N_values, res_N, "expected number of nodes N", "cost_vs_N.png")

# %% [markdown]
# Cost against the mean lifetime T. Both costs tend to N*omega = 50 for
# long-lived nodes; for short lifetimes the repair traffic of replication
# blows up while simple caching tends to R*N*omega = 250.

# %%
T_values = np.geomspace(1e-3, 1 if QUICK else 10, 5 if QUICK else 9)
res_T = sweep(lambda T: SystemParams(5, 100, 0.5, float(T)), T_values)
plot(T_values, res_T, "expected node lifetime T", "cost_vs_T.png", logx=True)
