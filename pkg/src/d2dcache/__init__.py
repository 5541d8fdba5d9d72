"""Energy cost of caching a file in a churning device-to-device community."""

from d2dcache.analytic import (
    BaseStationOnly,
    MbrRegenerating,
    PolicySpec,
    Replication2,
    SimpleCaching,
    SystemParams,
    analytic_rate,
    best_policy,
    cost_2rep,
    cost_bs_only,
    cost_mbr,
    cost_simple,
    prob_fewer_than,
    redundancy_threshold,
    repair_cost_rate,
    steady_state_pmf,
)
from d2dcache.codes import MbrCodeParams, mbr_params
from d2dcache.engine import SimConfig, compare_to_analytic, run_replicated, run_simulation
from d2dcache.population import generate_trajectory

__version__ = "0.1.0"
