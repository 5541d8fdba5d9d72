"""M/M/inf node churn: nodes arrive as a Poisson process of rate N/T and
stay for an Exp(T) lifetime.

Runs start in stationarity: the initial population is Poisson(N) and,
by memorylessness, the residual lifetime of each initial node is Exp(T).

Random streams
--------------
Every stream is a PCG64 generator seeded by
``SeedSequence(base_seed, spawn_key=(replication, purpose))``. SeedSequence
hashes the pair into independent 128-bit states, so replications and
purposes (population, requests, policy choices) never share draws.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, TextIO

import numpy as np

POPULATION_STREAM = 0
REQUEST_STREAM = 1
POLICY_STREAM = 2

MAX_SEED = 2**64


def make_rng(seed: int, replication: int = 0, purpose: int = POPULATION_STREAM) -> np.random.Generator:
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication), int(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


def sample_interarrival(rng: np.random.Generator, N: float, T: float, size=None):
    """Time between consecutive arrivals, Exp with mean T/N."""
    if not (N > 0 and T > 0):
        raise ValueError("N and T must be positive")
    return rng.exponential(T / N, size=size)


def sample_lifetime(rng: np.random.Generator, T: float, size=None):
    if not T > 0:
        raise ValueError("T must be positive")
    return rng.exponential(T, size=size)


@dataclass
class NodeTable:
    """Every node that is alive at some point of ``[0, horizon]``.

    Node ids are array indices. Initial nodes come first (arrival 0), the
    rest in arrival order, so ``arrival`` is sorted. Departures may lie
    beyond the horizon.
    """

    arrival: np.ndarray
    departure: np.ndarray
    initial_count: int
    horizon: float

    def __post_init__(self) -> None:
        self._dep_sorted = np.sort(self.departure)
        # first index with prefix-max departure > t is the oldest node alive at t
        self._dep_prefix_max = np.maximum.accumulate(self.departure) if len(self.departure) else self.departure
        self._arr_list = self.arrival.tolist()
        self._dep_list = self.departure.tolist()
        self._prefmax_list = self._dep_prefix_max.tolist()
        self._dep_sorted_list = self._dep_sorted.tolist()

    def __len__(self) -> int:
        return len(self.arrival)

    def count_at(self, t: float) -> int:
        """Number of live nodes at time t (arrived <= t < departed)."""
        return bisect_right(self._arr_list, t) - bisect_right(self._dep_sorted_list, t)

    def live_window(self, t: float) -> tuple[int, int]:
        """Index range ``[lo, hi)`` containing every node alive at ``t``."""
        return bisect_right(self._prefmax_list, t), bisect_right(self._arr_list, t)

    def is_alive(self, node: int, t: float) -> bool:
        return self._arr_list[node] <= t < self._dep_list[node]

    def live_nodes(self, t: float) -> np.ndarray:
        lo, hi = self.live_window(t)
        idx = np.arange(lo, hi)
        return idx[self.departure[lo:hi] > t]

    def time_average(self) -> float:
        """Time-averaged population over ``[0, horizon]``."""
        if self.horizon <= 0:
            return float(self.initial_count)
        alive = np.minimum(self.departure, self.horizon) - self.arrival
        return float(np.clip(alive, 0.0, None).sum() / self.horizon)

    def next_arrival_after(self, t: float) -> int | None:
        j = bisect_right(self._arr_list, t)
        return j if j < len(self._arr_list) and self._arr_list[j] <= self.horizon else None


def sample_nodes(N: float, T: float, horizon: float, rng: np.random.Generator) -> NodeTable:
    if not (N > 0 and T > 0):
        raise ValueError("N and T must be positive")
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be a finite non-negative time, got {horizon}")
    n0 = int(rng.poisson(N))
    residual = sample_lifetime(rng, T, size=n0)

    chunks = []
    t = 0.0
    chunk = max(16, int(1.1 * horizon * N / T) + 64)
    while t <= horizon:
        times = t + np.cumsum(sample_interarrival(rng, N, T, size=chunk))
        chunks.append(times)
        t = float(times[-1])
    arrivals = np.concatenate(chunks) if chunks else np.empty(0)
    arrivals = arrivals[arrivals <= horizon]
    lifetimes = sample_lifetime(rng, T, size=len(arrivals))

    arrival = np.concatenate([np.zeros(n0), arrivals])
    departure = np.concatenate([residual, arrivals + lifetimes])
    return NodeTable(arrival=arrival, departure=departure, initial_count=n0, horizon=float(horizon))


class EventKind(IntEnum):
    DEPARTURE = -1
    ARRIVAL = 1


@dataclass(frozen=True)
class PopulationEvent:
    time: float
    kind: EventKind
    node_id: int


@dataclass
class PopulationTrajectory:
    """Arrival/departure trace of one run in columnar form.

    ``kinds`` holds +1 for arrivals and -1 for departures. Initial nodes
    are part of ``initial_count`` and have no arrival event.
    """

    times: np.ndarray
    kinds: np.ndarray
    node_ids: np.ndarray
    initial_count: int
    horizon: float

    @property
    def events(self) -> Iterator[PopulationEvent]:
        for t, k, n in zip(self.times.tolist(), self.kinds.tolist(), self.node_ids.tolist()):
            yield PopulationEvent(t, EventKind(k), n)

    def counts(self) -> np.ndarray:
        """Population right after each event."""
        return self.initial_count + np.cumsum(self.kinds)

    def _segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Piecewise-constant count on ``[0, horizon]``: (levels, durations)."""
        levels = np.concatenate([[self.initial_count], self.counts()])
        edges = np.concatenate([[0.0], self.times, [self.horizon]])
        return levels, np.diff(edges)

    def time_average(self) -> float:
        if self.horizon <= 0:
            return float(self.initial_count)
        levels, durations = self._segments()
        return float(np.dot(levels, durations) / self.horizon)

    def occupancy(self) -> dict[int, float]:
        """Fraction of the horizon spent with each population count."""
        levels, durations = self._segments()
        weights = np.bincount(levels, weights=durations)
        total = weights.sum()
        return {i: float(w / total) for i, w in enumerate(weights) if w > 0}

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "event", "node_id", "count_after"])
        names = {1: "arrival", -1: "departure"}
        for t, k, n, c in zip(self.times.tolist(), self.kinds.tolist(), self.node_ids.tolist(), self.counts().tolist()):
            writer.writerow([repr(t), names[k], n, c])


def trajectory_from_nodes(nodes: NodeTable) -> PopulationTrajectory:
    n0 = nodes.initial_count
    ids = np.arange(len(nodes))
    arr_ids = ids[n0:]
    dep_mask = nodes.departure <= nodes.horizon
    dep_ids = ids[dep_mask]

    times = np.concatenate([nodes.arrival[n0:], nodes.departure[dep_mask]])
    kinds = np.concatenate([np.ones(len(arr_ids), np.int64), -np.ones(len(dep_ids), np.int64)])
    node_ids = np.concatenate([arr_ids, dep_ids])
    # tie-break equal times by insertion sequence
    order = np.lexsort((np.arange(len(times)), times))
    return PopulationTrajectory(
        times=times[order],
        kinds=kinds[order],
        node_ids=node_ids[order],
        initial_count=n0,
        horizon=nodes.horizon,
    )


def generate_trajectory(N: float, T: float, horizon: float, seed: int, replication: int = 0) -> PopulationTrajectory:
    rng = make_rng(seed, replication, POPULATION_STREAM)
    return trajectory_from_nodes(sample_nodes(N, T, horizon, rng))
