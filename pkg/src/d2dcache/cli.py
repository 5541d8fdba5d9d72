"""Command-line front end.

Subcommands::

    d2dcache analytic  --R 5 --N 100 --omega 0.5 --T 0.02
    d2dcache boundary  --from 0.1 --to 100 --steps 50 --scale log -o boundary.csv
    d2dcache simulate  --policy 2rep --R 5 --N 100 --omega 0.5 --T 0.02 --seed 42 --reps 20
    d2dcache sweep     --param R --from 1 --to 10 --steps 10 --policies simple,2rep ...

Exit codes: 0 on success, 2 on usage or parameter errors, 1 on runtime
(I/O) errors. ``D2DCACHE_SEED`` sets the default seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from d2dcache import analytic
from d2dcache.analytic import (
    BaseStationOnly,
    MbrRegenerating,
    PolicySpec,
    Replication2,
    SimpleCaching,
    SystemParams,
)
from d2dcache.engine import SimConfig, dump_json, run_replicated, run_simulation, write_trace_csv

SEED_ENV = "D2DCACHE_SEED"
SWEEP_COLUMNS = ("param", "value", "policy", "analytic_rate", "sim_mean_rate", "sim_stderr", "replications", "seed")
SWEEPABLE = ("R", "N", "omega", "T", "k")
POLICY_NAMES = ("bs", "simple", "2rep", "mbr")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def __post_init__(self) -> None:
        if self.param not in SWEEPABLE:
            raise UsageError(f"unknown sweep parameter {self.param!r}; choose from {', '.join(SWEEPABLE)}")
        if self.steps < 1:
            raise UsageError("steps must be >= 1")
        if self.steps == 1 and self.stop < self.start:
            raise UsageError("sweep needs from <= to")
        if self.steps > 1 and not self.start < self.stop:
            raise UsageError("sweep needs from < to")
        if self.scale not in ("linear", "log"):
            raise UsageError(f"unknown scale {self.scale!r}")
        if self.scale == "log" and self.start <= 0:
            raise UsageError("log scale needs from > 0")

    def values(self) -> list:
        if self.steps == 1:
            grid = np.array([self.start])
        elif self.scale == "log":
            grid = np.geomspace(self.start, self.stop, self.steps)
        else:
            grid = np.linspace(self.start, self.stop, self.steps)
        if self.param == "k":
            out = sorted({int(round(v)) for v in grid})
            if out[0] < 1:
                raise UsageError("k values must be >= 1")
            return out
        return [float(v) for v in grid]


def make_policy(name: str, k: int | None = None) -> PolicySpec:
    if name == "bs":
        return BaseStationOnly()
    if name == "simple":
        return SimpleCaching()
    if name == "2rep":
        return Replication2()
    if name == "mbr":
        if k is None:
            raise UsageError("policy mbr needs --k")
        return MbrRegenerating(k)
    raise UsageError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")


def policy_label(policy: PolicySpec) -> str:
    return f"mbr{policy.k}" if isinstance(policy, MbrRegenerating) else policy.name


def read_config(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file with defaults for the flags below")
    p.add_argument("--R", type=float, help="BS-to-D2D energy cost ratio")
    p.add_argument("--N", type=float, help="expected number of nodes")
    p.add_argument("--omega", type=float, help="per-node request rate")
    p.add_argument("--T", type=float, help="expected node lifetime")


def _add_sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int, help="independent replications (default 20)")
    p.add_argument("--horizon-mult", type=float, help="horizon in units of T (default 2000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dcache", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form cost of every caching method")
    _add_params(p)
    p.add_argument("--k-max", type=int, help="largest MBR k to tabulate (default 8)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")

    p = sub.add_parser("boundary", help="decision threshold R* over a grid of N*omega*T")
    p.add_argument("--from", dest="start", type=float, default=0.1)
    p.add_argument("--to", dest="stop", type=float, default=100.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--scale", choices=("linear", "log"), default="log")
    p.add_argument("-o", "--output", help="CSV path (default stdout)")

    p = sub.add_parser("simulate", help="replicated simulation of one policy")
    _add_params(p)
    _add_sim(p)
    p.add_argument("--policy", choices=POLICY_NAMES)
    p.add_argument("--k", type=int, help="MBR code dimension")
    p.add_argument("-o", "--output", help="JSON path (default stdout)")
    p.add_argument("--trace", help="write the event trace of replication 0 to this CSV")

    p = sub.add_parser("sweep", help="analytic and simulated cost over a parameter grid")
    _add_params(p)
    _add_sim(p)
    p.add_argument("--param", required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--scale", choices=("linear", "log"), default="linear")
    p.add_argument("--policies", default="simple,2rep", help="comma-separated: bs,simple,2rep,mbr")
    p.add_argument("--k", type=int, help="MBR k when not swept (default 2)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    return parser


def _merge_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    types = {"R": float, "N": float, "omega": float, "T": float, "seed": int, "reps": int,
             "horizon_mult": float, "k": int, "k_max": int, "policy": str}
    for key, raw in read_config(args.config).items():
        if key not in types or not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            try:
                setattr(args, key, types[key](raw))
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None


def _params(args) -> SystemParams:
    missing = [n for n in ("R", "N", "omega", "T") if getattr(args, n) is None]
    if missing:
        raise UsageError("missing parameter(s): " + ", ".join("--" + m for m in missing))
    return SystemParams(R=args.R, N=args.N, omega=args.omega, T=args.T)


def _sim_config(args) -> SimConfig:
    return SimConfig(
        horizon_multiplier=2000.0 if args.horizon_mult is None else args.horizon_mult,
        seed=_default_seed() if args.seed is None else args.seed,
        replications=20 if args.reps is None else args.reps,
    )


def _open_out(path: str | None):
    if path is None:
        return _NoClose(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


class _NoClose:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()


def cmd_analytic(args) -> int:
    p = _params(args)
    k_max = 8 if args.k_max is None else args.k_max
    if k_max < 1:
        raise UsageError("--k-max must be >= 1")
    policies = [BaseStationOnly(), SimpleCaching(), Replication2()]
    policies += [MbrRegenerating(k) for k in range(1, k_max + 1)]
    rows = [(policy_label(q), analytic.caching_nodes(q), analytic.analytic_rate(p, q)) for q in policies]
    best, best_cost = analytic.best_policy(p, k_max)
    threshold = analytic.redundancy_threshold(p)
    if args.json:
        dump_json({
            "params": asdict(p),
            "costs": [{"policy": n, "caching_nodes": c, "rate": r} for n, c, r in rows],
            "threshold_R": threshold,
            "best": {"policy": policy_label(best), "rate": best_cost},
        }, sys.stdout)
        return 0
    print(f"{'policy':<8} {'nodes':>5} {'rate':>22}")
    for name, nodes, rate in rows:
        print(f"{name:<8} {nodes:>5} {rate!r:>22}")
    print(f"threshold R* = {threshold!r}")
    print(f"best: {policy_label(best)} ({best_cost!r})")
    return 0


def cmd_boundary(args) -> int:
    spec = SweepSpec("R", args.start, args.stop, args.steps, args.scale)
    with _open_out(args.output) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["load", "threshold"])
        for load in spec.values():
            writer.writerow([repr(load), repr(analytic.threshold_for_load(load))])
    return 0


def cmd_simulate(args) -> int:
    if args.policy is None:
        raise UsageError("--policy is required")
    p = _params(args)
    policy = make_policy(args.policy, args.k)
    cfg = _sim_config(args)
    summary = run_replicated(p, policy, cfg)
    if args.trace:
        rows: list = []
        run_simulation(p, policy, cfg, replication=0, trace=rows)
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            write_trace_csv(rows, fh)
    with _open_out(args.output) as fh:
        dump_json(summary.to_dict(), fh)
    return 0


def _sweep_point(job):
    p, policy, cfg = job
    s = run_replicated(p, policy, cfg)
    return s.mean_rate, s.stderr


def cmd_sweep(args) -> int:
    base = _params(args)
    cfg = _sim_config(args)
    spec = SweepSpec(args.param, args.start, args.stop, args.steps, args.scale)
    names = [n.strip() for n in args.policies.split(",") if n.strip()]
    if not names:
        raise UsageError("--policies is empty")
    default_k = 2 if args.k is None else args.k

    points = []
    for value in spec.values():
        if spec.param == "k":
            params, k = base, value
        else:
            params, k = replace(base, **{spec.param: value}), default_k
        for name in names:
            points.append((value, params, make_policy(name, k)))

    jobs = [(params, policy, cfg) for _, params, policy in points]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(job) for job in jobs]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for (value, params, policy), (mean, se) in zip(points, results):
        writer.writerow([
            spec.param, repr(value), policy_label(policy),
            repr(analytic.analytic_rate(params, policy)), repr(mean), repr(se),
            cfg.replications, cfg.seed,
        ])
    with _open_out(args.output) as fh:
        fh.write(buf.getvalue())
    return 0


COMMANDS = {"analytic": cmd_analytic, "boundary": cmd_boundary, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config(args)
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"d2dcache {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"d2dcache {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
