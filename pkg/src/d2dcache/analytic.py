"""Closed-form cost model for a D2D storage community under M/M/inf churn.

All costs are transmit energy per time unit, with a D2D whole-file transfer
costing 1 and a base-station transfer costing ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln, logsumexp

from d2dcache.codes import mbr_params

__all__ = [
    "SystemParams",
    "BaseStationOnly",
    "SimpleCaching",
    "Replication2",
    "MbrRegenerating",
    "PolicySpec",
    "steady_state_pmf",
    "prob_fewer_than",
    "cost_bs_only",
    "cost_simple",
    "repair_cost_rate",
    "cost_mbr",
    "cost_2rep",
    "threshold_for_load",
    "redundancy_threshold",
    "analytic_rate",
    "caching_nodes",
    "best_policy",
]


def _check_positive_finite(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Cost ratio ``R``, mean population ``N``, per-node request rate
    ``omega`` and mean node lifetime ``T``."""

    R: float
    N: float
    omega: float
    T: float

    def __post_init__(self) -> None:
        if not (isinstance(self.R, (int, float)) and math.isfinite(self.R) and self.R >= 1):
            raise ValueError(f"R must be a finite number >= 1, got {self.R!r}")
        _check_positive_finite("N", self.N)
        _check_positive_finite("omega", self.omega)
        _check_positive_finite("T", self.T)

    @property
    def churn_rate(self) -> float:
        """Per-node departure rate 1/T."""
        return 1.0 / self.T

    @property
    def arrival_rate(self) -> float:
        return self.N / self.T

    @property
    def request_rate(self) -> float:
        return self.N * self.omega

    @property
    def load(self) -> float:
        """Expected number of requests during one node lifetime, N*omega*T."""
        return self.N * self.omega * self.T


@dataclass(frozen=True)
class BaseStationOnly:
    name = "bs"


@dataclass(frozen=True)
class SimpleCaching:
    name = "simple"


@dataclass(frozen=True)
class Replication2:
    name = "2rep"


@dataclass(frozen=True)
class MbrRegenerating:
    k: int

    name = "mbr"

    def __post_init__(self) -> None:
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"MBR code needs an integer k >= 1, got {self.k!r}")


PolicySpec = Union[BaseStationOnly, SimpleCaching, Replication2, MbrRegenerating]


def steady_state_pmf(N: float, i: int) -> float:
    """Probability of ``i`` nodes in the stationary M/M/inf community.

    Evaluated in log space so that large ``i`` neither overflows ``N**i``
    nor ``i!``.
    """
    _check_positive_finite("N", N)
    if isinstance(i, bool) or int(i) != i or i < 0:
        raise ValueError(f"i must be a non-negative integer, got {i!r}")
    i = int(i)
    return math.exp(i * math.log(N) - N - math.lgamma(i + 1))


def prob_fewer_than(N: float, m: int) -> float:
    """P(population < m) under the stationary Poisson(N) distribution."""
    _check_positive_finite("N", N)
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    i = np.arange(int(m), dtype=np.float64)
    log_terms = i * math.log(N) - N - gammaln(i + 1.0)
    return float(min(1.0, math.exp(logsumexp(log_terms))))


def cost_bs_only(p: SystemParams) -> float:
    return p.R * p.N * p.omega


def cost_simple(p: SystemParams, form: str = "expanded") -> float:
    """Expected cost rate of simple caching (one cacher, refetch on loss).

    ``form="renewal"`` evaluates the renewal-cycle ratio
    (N*w*T + R) / (T + 1/(N*w)); ``"expanded"`` evaluates the equivalent
    polynomial form. Both agree to rounding.
    """
    nw = p.N * p.omega
    if form == "expanded":
        return (nw * nw * p.T + p.R * nw) / (1.0 + nw * p.T)
    if form == "renewal":
        return (nw * p.T + p.R) / (p.T + 1.0 / nw)
    raise ValueError(f"unknown form {form!r}")


def repair_cost_rate(k: int, T: float) -> float:
    """Repair traffic per time unit of a (k+1, k, k) MBR code.

    k+1 holders each leave at rate 1/T and each repair moves 2/(k+1), so
    the product is 2/T whatever ``k`` is. The k-dependence cancels
    symbolically; the returned value is computed without it.
    """
    mbr_params(k)
    _check_positive_finite("T", T)
    return 2.0 / T


def cost_mbr(p: SystemParams, k: int) -> float:
    code = mbr_params(k)
    return p.N * p.omega * code.retrieval + repair_cost_rate(k, p.T)


def cost_2rep(p: SystemParams) -> float:
    return p.N * p.omega + 2.0 / p.T


def threshold_for_load(load: float) -> float:
    """Cost ratio above which 2-replication beats simple caching, as a
    function of the expected requests per node lifetime."""
    _check_positive_finite("load", load)
    return 3.0 + 2.0 / load


def redundancy_threshold(p: SystemParams) -> float:
    return threshold_for_load(p.load)


def analytic_rate(p: SystemParams, policy: PolicySpec) -> float:
    """Closed-form cost rate of ``policy``."""
    if isinstance(policy, BaseStationOnly):
        return cost_bs_only(p)
    if isinstance(policy, SimpleCaching):
        return cost_simple(p)
    if isinstance(policy, Replication2):
        return cost_2rep(p)
    if isinstance(policy, MbrRegenerating):
        return cost_mbr(p, policy.k)
    raise TypeError(f"not a policy: {policy!r}")


def caching_nodes(policy: PolicySpec) -> int:
    if isinstance(policy, BaseStationOnly):
        return 0
    if isinstance(policy, SimpleCaching):
        return 1
    if isinstance(policy, Replication2):
        return 2
    if isinstance(policy, MbrRegenerating):
        return policy.k + 1
    raise TypeError(f"not a policy: {policy!r}")


# Costs closer than this (relative) count as a tie.
TIE_RTOL = 1e-12


def best_policy(p: SystemParams, k_max: int = 8) -> tuple[PolicySpec, float]:
    """Cheapest method among BS-only, simple caching, 2-replication and
    MBR codes with k in [1, k_max].

    Ties go to the method with fewer caching nodes.
    """
    if isinstance(k_max, bool) or int(k_max) != k_max or k_max < 1:
        raise ValueError(f"k_max must be a positive integer, got {k_max!r}")
    candidates: list[PolicySpec] = [BaseStationOnly(), SimpleCaching(), Replication2()]
    candidates += [MbrRegenerating(k) for k in range(1, int(k_max) + 1)]

    best, best_cost = candidates[0], analytic_rate(p, candidates[0])
    for policy in candidates[1:]:
        cost = analytic_rate(p, policy)
        if cost < best_cost and not math.isclose(cost, best_cost, rel_tol=TIE_RTOL):
            best, best_cost = policy, cost
    return best, best_cost
