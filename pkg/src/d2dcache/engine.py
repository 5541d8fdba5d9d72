"""Event-driven simulation of file requests, downloads and repairs.

Churn is sampled up front as a node table (see ``population``); it does not
depend on the caching policy. Requests are generated per node: each live
node issues requests as a Poisson process of rate omega, so the aggregate
rate tracks the live population n(t). A request issued by a node that is
currently caching the file is dropped, which makes the requester uniform
over live non-caching nodes.

The policy loop then walks requests and caching-node departures in time
order. Only those events change the cache state, so the other churn events
are never visited one by one.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import TextIO

import numpy as np

from d2dcache.analytic import (
    BaseStationOnly,
    MbrRegenerating,
    PolicySpec,
    Replication2,
    SimpleCaching,
    SystemParams,
    analytic_rate,
)
from d2dcache.codes import mbr_params
from d2dcache.population import (
    POLICY_STREAM,
    POPULATION_STREAM,
    REQUEST_STREAM,
    NodeTable,
    make_rng,
    sample_nodes,
)

INF = math.inf


@dataclass(frozen=True)
class SimConfig:
    horizon_multiplier: float = 2000.0
    seed: int = 0
    replications: int = 20

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon_multiplier) and self.horizon_multiplier > 0):
            raise ValueError(f"horizon_multiplier must be positive, got {self.horizon_multiplier}")
        if isinstance(self.replications, bool) or int(self.replications) != self.replications or self.replications < 1:
            raise ValueError(f"replications must be a positive integer, got {self.replications}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def horizon(self, p: SystemParams) -> float:
        return self.horizon_multiplier * p.T


@dataclass(frozen=True)
class CostBreakdown:
    bs_energy: float
    d2d_download_energy: float
    repair_energy: float
    bs_fallback_count: int
    horizon: float

    @property
    def total(self) -> float:
        return self.bs_energy + self.d2d_download_energy + self.repair_energy

    @property
    def rate(self) -> float:
        return self.total / self.horizon


@dataclass(frozen=True)
class RunStats:
    request_count: int
    local_hit_count: int
    bs_download_count: int
    repair_count: int
    mean_population: float


@dataclass
class RunResult:
    params: SystemParams
    policy: PolicySpec
    seed: int
    replication: int
    cost: CostBreakdown
    stats: RunStats

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "policy": policy_to_dict(self.policy),
            "seed": self.seed,
            "replication": self.replication,
            "cost": {**asdict(self.cost), "total": self.cost.total, "rate": self.cost.rate},
            "stats": asdict(self.stats),
        }


def policy_to_dict(policy: PolicySpec) -> dict:
    out = {"name": policy.name}
    if isinstance(policy, MbrRegenerating):
        out["k"] = policy.k
    return out


TRACE_COLUMNS = ("time", "event_kind", "node_id", "energy_delta", "population")


class _Sampler:
    """Uniform choice of an idle live node by rejection over the index
    window that holds every node alive at ``t``."""

    def __init__(self, nodes: NodeTable, rng: np.random.Generator):
        self.nodes = nodes
        self.rng = rng
        self._buf: list[float] = []

    def _uniform(self) -> float:
        if not self._buf:
            self._buf = self.rng.random(1024).tolist()
        return self._buf.pop()

    def pick_idle(self, t: float, busy) -> int | None:
        nodes = self.nodes
        busy_live = sum(1 for b in busy if nodes.is_alive(b, t))
        if nodes.count_at(t) - busy_live <= 0:
            return None
        lo, hi = nodes.live_window(t)
        dep = nodes._dep_list
        span = hi - lo
        while True:
            j = lo + int(self._uniform() * span)
            if dep[j] > t and j not in busy:
                return j

    def pick_many(self, t: float, busy, count: int) -> list[int]:
        chosen: list[int] = []
        taken = set(busy)
        for _ in range(count):
            j = self.pick_idle(t, taken)
            if j is None:
                break
            chosen.append(j)
            taken.add(j)
        return chosen


def _requests(nodes: NodeTable, omega: float, rng: np.random.Generator) -> tuple[list[float], list[int]]:
    start = nodes.arrival
    stop = np.minimum(nodes.departure, nodes.horizon)
    span = np.maximum(stop - start, 0.0)
    counts = rng.poisson(omega * span)
    owner = np.repeat(np.arange(len(nodes)), counts)
    times = start[owner] + rng.random(len(owner)) * span[owner]
    order = np.lexsort((owner, times))
    return times[order].tolist(), owner[order].tolist()


class _Tracer:
    def __init__(self, nodes: NodeTable, rows: list | None):
        self.nodes = nodes
        self.rows = rows

    def __call__(self, t: float, kind: str, node: int, energy: float) -> None:
        if self.rows is not None:
            self.rows.append((t, kind, node, energy, self.nodes.count_at(t)))


def _simulate_bs_only(req_t, req_n, R, trace):
    for t, i in zip(req_t, req_n):
        trace(t, "request_bs", i, R)
    n = len(req_t)
    return dict(requests=n, hits=0, bs=n, repairs=0, fallbacks=0)


def _simulate_simple(nodes, req_t, req_n, sampler, R, trace):
    dep = nodes._dep_list
    seeded = sampler.pick_many(0.0, (), 1)
    for h in seeded:
        trace(0.0, "seed", h, 0.0)
    cacher = seeded[0] if seeded else -1
    cacher_dep = dep[cacher] if seeded else INF
    requests = hits = bs = 0
    for t, i in zip(req_t, req_n):
        if cacher_dep <= t:
            trace(cacher_dep, "departure", cacher, 0.0)
            cacher, cacher_dep = -1, INF
        if i == cacher:
            continue
        requests += 1
        if cacher < 0:
            bs += 1
            trace(t, "request_bs", i, R)
            cacher, cacher_dep = i, dep[i]
        else:
            hits += 1
            trace(t, "request_d2d", i, 1.0)
    if cacher_dep <= nodes.horizon:
        trace(cacher_dep, "departure", cacher, 0.0)
    return dict(requests=requests, hits=hits, bs=bs, repairs=0, fallbacks=0)


def _simulate_replication(nodes, req_t, req_n, sampler, R, trace):
    """Two whole-file copies. A lost copy is re-made by the survivor onto an
    idle node; with no idle node the repair waits for the next arrival."""
    dep = nodes._dep_list
    horizon = nodes.horizon
    holders: dict[int, float] = {h: dep[h] for h in sampler.pick_many(0.0, (), 2)}
    for h in holders:
        trace(0.0, "seed", h, 0.0)
    pending = 2 - len(holders) if holders else 0
    pending_since = 0.0
    requests = hits = bs = repairs = fallbacks = 0

    def advance(until: float) -> None:
        nonlocal pending, pending_since, repairs
        while True:
            td = min(holders.values()) if holders else INF
            ta = INF
            if pending:
                j = nodes.next_arrival_after(pending_since)
                if j is not None:
                    ta = nodes._arr_list[j]
            if min(td, ta) > until:
                return
            if td <= ta:
                h = next(n for n, d in holders.items() if d == td)
                del holders[h]
                trace(td, "departure", h, 0.0)
                if not holders:
                    pending = 0
                    continue
                newcomer = sampler.pick_idle(td, holders)
                if newcomer is None:
                    pending, pending_since = 1, td
                else:
                    holders[newcomer] = dep[newcomer]
                    repairs += 1
                    trace(td, "repair", newcomer, 1.0)
            else:
                holders[j] = dep[j]
                pending = 0
                repairs += 1
                trace(ta, "repair", j, 1.0)

    for t, i in zip(req_t, req_n):
        advance(t)
        if i in holders:
            continue
        requests += 1
        if holders:
            hits += 1
            trace(t, "request_d2d", i, 1.0)
            continue
        bs += 1
        fallbacks += 1
        trace(t, "fallback", i, R)
        holders[i] = dep[i]
        newcomer = sampler.pick_idle(t, holders)
        if newcomer is None:
            pending, pending_since = 1, t
        else:
            holders[newcomer] = dep[newcomer]
            repairs += 1
            trace(t, "repair", newcomer, 1.0)
    advance(horizon)
    return dict(requests=requests, hits=hits, bs=bs, repairs=repairs, fallbacks=fallbacks)


def _simulate_mbr(nodes, req_t, req_n, sampler, R, k, trace):
    """(k+1, k, k) MBR code. A departed block is regenerated by the k
    survivors onto an idle node. Without k survivors or an idle node the
    generation is degraded until the next request refetches the file from
    the base station and re-seeds the blocks locally at no charge."""
    dep = nodes._dep_list
    horizon = nodes.horizon
    code = mbr_params(k)
    width = k + 1
    holders: dict[int, float] = {h: dep[h] for h in sampler.pick_many(0.0, (), width)}
    for h in holders:
        trace(0.0, "seed", h, 0.0)
    degraded = len(holders) < width
    requests = hits = bs = repairs = fallbacks = 0

    def advance(until: float) -> None:
        nonlocal degraded, repairs
        while holders:
            td = min(holders.values())
            if td > until:
                return
            h = next(n for n, d in holders.items() if d == td)
            del holders[h]
            trace(td, "departure", h, 0.0)
            if degraded:
                continue
            newcomer = sampler.pick_idle(td, holders) if len(holders) >= k else None
            if newcomer is None:
                degraded = True
            else:
                holders[newcomer] = dep[newcomer]
                repairs += 1
                trace(td, "repair", newcomer, code.gamma)

    for t, i in zip(req_t, req_n):
        advance(t)
        if i in holders:
            continue
        requests += 1
        if not degraded:
            hits += 1
            trace(t, "request_d2d", i, code.retrieval)
            continue
        bs += 1
        fallbacks += 1
        trace(t, "fallback", i, R)
        holders[i] = dep[i]
        for h in sampler.pick_many(t, holders, width - len(holders)):
            holders[h] = dep[h]
            trace(t, "reseed", h, 0.0)
        degraded = len(holders) < width
    advance(horizon)
    return dict(requests=requests, hits=hits, bs=bs, repairs=repairs, fallbacks=fallbacks)


def run_simulation(
    p: SystemParams,
    policy: PolicySpec,
    cfg: SimConfig,
    replication: int = 0,
    trace: list | None = None,
) -> RunResult:
    """Simulate one run of ``policy`` over ``cfg.horizon_multiplier * T``.

    Pass a list as ``trace`` to collect ``(time, event_kind, node_id,
    energy_delta, population)`` rows in event order.
    """
    horizon = cfg.horizon(p)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    nodes = sample_nodes(p.N, p.T, horizon, make_rng(cfg.seed, replication, POPULATION_STREAM))
    req_t, req_n = _requests(nodes, p.omega, make_rng(cfg.seed, replication, REQUEST_STREAM))
    sampler = _Sampler(nodes, make_rng(cfg.seed, replication, POLICY_STREAM))
    tracer = _Tracer(nodes, trace)

    repair_size = 1.0
    download_size = 1.0
    if isinstance(policy, BaseStationOnly):
        counts = _simulate_bs_only(req_t, req_n, p.R, tracer)
    elif isinstance(policy, SimpleCaching):
        counts = _simulate_simple(nodes, req_t, req_n, sampler, p.R, tracer)
    elif isinstance(policy, Replication2):
        counts = _simulate_replication(nodes, req_t, req_n, sampler, p.R, tracer)
    elif isinstance(policy, MbrRegenerating):
        counts = _simulate_mbr(nodes, req_t, req_n, sampler, p.R, policy.k, tracer)
        code = mbr_params(policy.k)
        repair_size, download_size = code.gamma, code.retrieval
    else:
        raise TypeError(f"not a policy: {policy!r}")

    cost = CostBreakdown(
        bs_energy=counts["bs"] * p.R,
        d2d_download_energy=counts["hits"] * download_size,
        repair_energy=counts["repairs"] * repair_size,
        bs_fallback_count=counts["fallbacks"],
        horizon=horizon,
    )
    stats = RunStats(
        request_count=counts["requests"],
        local_hit_count=counts["hits"],
        bs_download_count=counts["bs"],
        repair_count=counts["repairs"],
        mean_population=nodes.time_average(),
    )
    if trace is not None:
        trace.sort(key=lambda row: row[0])
    return RunResult(p, policy, cfg.seed, replication, cost, stats)


@dataclass
class ReplicationSummary:
    params: SystemParams
    policy: PolicySpec
    config: SimConfig
    rates: list[float]
    runs: list[RunResult] = field(repr=False)

    @property
    def mean_rate(self) -> float:
        return float(np.mean(self.rates))

    @property
    def std(self) -> float:
        return float(np.std(self.rates, ddof=1)) if len(self.rates) > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(len(self.rates))

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "policy": policy_to_dict(self.policy),
            "config": asdict(self.config),
            "analytic_rate": analytic_rate(self.params, self.policy),
            "mean_rate": self.mean_rate,
            "std": self.std,
            "stderr": self.stderr,
            "rates": list(self.rates),
            "runs": [r.to_dict() for r in self.runs],
        }


def run_replicated(p: SystemParams, policy: PolicySpec, cfg: SimConfig) -> ReplicationSummary:
    runs = [run_simulation(p, policy, cfg, replication=r) for r in range(cfg.replications)]
    return ReplicationSummary(p, policy, cfg, [r.cost.rate for r in runs], runs)


def compare_to_analytic(p: SystemParams, policy: PolicySpec, cfg: SimConfig) -> float:
    """Relative gap |simulated mean - closed form| / closed form."""
    expected = analytic_rate(p, policy)
    return abs(run_replicated(p, policy, cfg).mean_rate - expected) / expected


def write_trace_csv(rows: list, fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for t, kind, node, energy, pop in rows:
        writer.writerow([repr(t), kind, node, repr(energy), pop])


def dump_json(obj: dict, fh: TextIO) -> None:
    json.dump(obj, fh, indent=2, sort_keys=True)
    fh.write("\n")
