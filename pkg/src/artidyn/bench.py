"""Timing harness for link-count and group-count sweeps.

Every chain and joint input is derived from the configured seed, so two runs
with the same configuration time identical workloads. Inputs are drawn
uniformly in [-1, 1] per unit. Only the dynamics call sits inside the timed
region; input generation, warm-up and correctness spot checks run outside
it.

Run ``bench --help`` (or ``python -m artidyn.bench``) for the command line.
"""

import argparse
import csv
import math
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynfd import ALGORITHMS, batch_forward_dynamics, forward_dynamics
from .dynid import inverse_dynamics, inverse_dynamics_sequential
from .model import random_chain

__all__ = [
    "ALGOS",
    "BenchConfig",
    "BenchRecord",
    "ConfigError",
    "make_chain",
    "make_inputs",
    "run_benchmark",
    "emit_csv",
    "read_csv",
    "loglog_slope",
    "main",
]

ALGOS = ("jsiia", "abia", "cfa", "invdyn")
CSV_HEADER = ["algo", "n_links", "n_groups", "repeats", "worker_count", "mean_us", "stddev_us"]
WARMUP_CALLS = 3
SPOT_CHECK_FRACTION = 0.01
SPOT_CHECK_TOL = 1e-8

_MODES = {"link": "link", "link-sweep": "link", "group": "group", "group-sweep": "group"}


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    mode: str = "link"
    algos: tuple = ("jsiia", "abia", "cfa")
    link_counts: tuple = (10, 50, 100, 200)
    group_counts: tuple = (1, 10, 100, 1000)
    repeats: int = 1000
    seed: int = 42
    worker_count: int = 1
    output_path: str = None
    spot_check: bool = True

    def validate(self):
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {sorted(_MODES)}, got {self.mode!r}")
        self.mode = _MODES[self.mode]
        if not self.algos:
            raise ConfigError("at least one algorithm is required")
        for a in self.algos:
            if a not in ALGOS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {', '.join(ALGOS)}")
        if not self.link_counts or any(int(n) < 1 for n in self.link_counts):
            raise ConfigError("link counts must be a nonempty list of positive integers")
        if self.mode == "group" and (not self.group_counts
                                     or any(int(g) < 1 for g in self.group_counts)):
            raise ConfigError("group counts must be a nonempty list of positive integers")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.worker_count < 1:
            raise ConfigError("workers must be >= 1")
        return self


@dataclass
class BenchRecord:
    algo: str
    n_links: int
    n_groups: int
    mean_time: float  # microseconds
    stddev: float     # microseconds
    repeats: int
    worker_count: int
    error: str = field(default=None, compare=False)

    @property
    def ok(self):
        return self.error is None


# -- deterministic workloads ---------------------------------------------------

def _rng(*key):
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def make_chain(seed, n_links, member=0):
    """Chain ``member`` of a group; independent of algorithm and worker count."""
    child = np.random.SeedSequence([int(seed), int(n_links), int(member)])
    return random_chain(n_links, seed=child.generate_state(1)[0])


def make_inputs(seed, n_links, n_groups, repeat):
    """Joint inputs ``(q, qd, u)`` of shape ``(n_groups, 3, n_links)``.

    ``u`` is the torque for forward dynamics and the acceleration for
    inverse dynamics.
    """
    rng = _rng(seed, n_links, n_groups, repeat, 0x5EED)
    return rng.uniform(-1.0, 1.0, size=(n_groups, 3, n_links))


# -- execution -------------------------------------------------------------------

def _call_single(algo, chain, inputs, workers):
    q, qd, u = inputs[0]
    if algo == "invdyn":
        return inverse_dynamics(chain, q, qd, u, workers=workers)
    return forward_dynamics(chain, q, qd, u, algo=algo, workers=workers)


def _call_group(algo, chains, inputs, workers):
    if algo == "invdyn":
        def one(k):
            q, qd, qdd = inputs[k]
            return inverse_dynamics(chains[k], q, qd, qdd)

        if workers <= 1:
            return [one(k) for k in range(len(chains))]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(len(chains))))
    problems = [(chains[k], *inputs[k]) for k in range(len(chains))]
    out = batch_forward_dynamics(problems, algo, workers)
    if not out.ok:
        k = next(i for i, e in enumerate(out.errors) if e is not None)
        raise out.errors[k]
    return out.results


def _spot_check(algo, chain, q, qd, u, result):
    if algo == "invdyn":
        ref, _ = inverse_dynamics_sequential(chain, q, qd, u)
    else:
        other = "cfa" if algo == "jsiia" else "jsiia"
        ref = ALGORITHMS[other](chain, q, qd, u)
    err = np.linalg.norm(result - ref) / max(np.linalg.norm(ref), 1e-300)
    if not err <= SPOT_CHECK_TOL:
        raise AssertionError(f"spot check failed: relative error {err:.3e} vs reference")


def _time_cell(config, algo, n, groups):
    workers = config.worker_count
    chains = [make_chain(config.seed, n, m) for m in range(groups)]
    if config.mode == "link":
        def call(inputs):
            return [_call_single(algo, chains[0], inputs, workers)]
    else:
        def call(inputs):
            return _call_group(algo, chains, inputs, workers)

    # warm-up inputs use repeat indices past the timed ones
    for w in range(WARMUP_CALLS):
        call(make_inputs(config.seed, n, groups, config.repeats + w))

    n_checks = max(1, math.ceil(SPOT_CHECK_FRACTION * config.repeats)) if config.spot_check else 0
    stride = max(1, config.repeats // max(n_checks, 1))
    check_at = set(range(0, config.repeats, stride)[:n_checks])
    to_check = []
    times = []
    for r in range(config.repeats):
        inputs = make_inputs(config.seed, n, groups, r)
        t0 = time.perf_counter()
        out = call(inputs)
        times.append((time.perf_counter() - t0) * 1e6)
        if r in check_at:
            to_check.append((inputs[0], out[0]))
    for (q, qd, u), result in to_check:
        _spot_check(algo, chains[0], q, qd, u, result)
    mean = statistics.fmean(times)
    std = statistics.stdev(times) if len(times) > 1 else 0.0
    return mean, std


def run_benchmark(config):
    """Time every (algorithm, link count, group count) cell of ``config``.

    A failing cell yields a record with ``error`` set and NaN timings; the
    remaining cells still run.
    """
    config.validate()
    groups_list = [1] if config.mode == "link" else [int(g) for g in config.group_counts]
    records = []
    for n in (int(x) for x in config.link_counts):
        for groups in groups_list:
            for algo in config.algos:
                try:
                    mean, std = _time_cell(config, algo, n, groups)
                    err = None
                except (ArithmeticError, AssertionError, ValueError) as exc:
                    mean = std = float("nan")
                    err = f"{type(exc).__name__}: {exc}"
                records.append(BenchRecord(algo, n, groups, mean, std, config.repeats,
                                           config.worker_count, err))
    return records


# -- CSV -------------------------------------------------------------------------

def emit_csv(records, path):
    """Write successful records as CSV; failed cells are omitted."""
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in records:
                if not r.ok:
                    continue
                writer.writerow([r.algo, r.n_links, r.n_groups, r.repeats, r.worker_count,
                                 repr(float(r.mean_time)), repr(float(r.stddev))])
    except OSError as exc:
        raise OSError(f"cannot write benchmark CSV {path}: {exc.strerror or exc}") from exc


def read_csv(path):
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [BenchRecord(row["algo"], int(row["n_links"]), int(row["n_groups"]),
                            float(row["mean_us"]), float(row["stddev_us"]),
                            int(row["repeats"]), int(row["worker_count"]))
                for row in reader]


def loglog_slope(records, algo, n_min=32, n_max=256):
    """Least-squares slope of log(mean time) against log(n) for one algorithm."""
    pts = [(r.n_links, r.mean_time) for r in records
           if r.ok and r.algo == algo and n_min <= r.n_links <= n_max]
    if len(pts) < 2:
        raise ValueError(f"need at least two link counts for {algo}")
    x, y = np.log(np.array(pts, dtype=float)).T
    return float(np.polyfit(x, y, 1)[0])


# -- command line ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _build_parser():
    p = _Parser(prog="bench", description="Time forward/inverse dynamics over link or group sweeps.")
    p.add_argument("--mode", default="link", help="link or group sweep")
    p.add_argument("--algos", default="jsiia,abia,cfa",
                   help="comma-separated subset of jsiia,abia,cfa,invdyn")
    p.add_argument("--links", type=_int_list, default=(10, 50, 100, 200))
    p.add_argument("--groups", type=_int_list, default=(1, 10, 100, 1000))
    p.add_argument("--repeats", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results.csv")
    p.add_argument("--no-spot-check", action="store_true",
                   help="skip the cross-algorithm correctness checks")
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    config = BenchConfig(
        mode=args.mode,
        algos=tuple(a.strip() for a in args.algos.split(",") if a.strip()),
        link_counts=args.links,
        group_counts=args.groups,
        repeats=args.repeats,
        seed=args.seed,
        worker_count=args.workers,
        output_path=args.out,
        spot_check=not args.no_spot_check,
    )
    try:
        config.validate()
    except ConfigError as exc:
        print(f"bench: config error: {exc}", file=sys.stderr)
        return 1
    records = run_benchmark(config)
    for r in records:
        if r.ok:
            print(f"{r.algo:>6} n={r.n_links:<4} groups={r.n_groups:<5} "
                  f"mean={r.mean_time:12.1f} us  sd={r.stddev:10.1f} us")
        else:
            print(f"{r.algo:>6} n={r.n_links:<4} groups={r.n_groups:<5} FAILED: {r.error}",
                  file=sys.stderr)
    try:
        emit_csv(records, config.output_path)
    except OSError as exc:
        print(f"bench: {exc}", file=sys.stderr)
        return 1
    return 0 if all(r.ok for r in records) else 2


if __name__ == "__main__":
    sys.exit(main())
