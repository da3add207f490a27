"""Command line entry point: ``mcscache run | sweep | oracle``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time

import numpy as np

from . import oracles
from .allocation import allocate
from .assignment import AssignmentResult, max_weight_matching
from .baselines import POLICIES
from .cache import CacheEntry, CacheState, posterior_order_key
from .harness import AXES, SweepSpec, emit_csv, run_sweep
from .policy import run_horizon, write_trace
from .scenario import (
    RANGE_FIELDS,
    ConfigError,
    ScenarioConfig,
    TaskType,
    UserArrays,
    coerce_field,
    config_from_mapping,
    generate_scenario,
    read_key_values,
)

SWEEP_KEYS = ("axis", "axis_values", "policies", "seeds", "num_seeds", "out", "workers")


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("scenario overrides")
    for f in dataclasses.fields(ScenarioConfig):
        flags = [f"--{f.name}"]
        if "_" in f.name:
            flags.append(f"--{f.name.replace('_', '-')}")
        nargs = 2 if f.name in RANGE_FIELDS else None
        group.add_argument(*flags, dest=f.name, nargs=nargs, default=None, metavar=f.name.upper())


def _overrides(args) -> dict:
    return {f.name: getattr(args, f.name) for f in dataclasses.fields(ScenarioConfig)
            if getattr(args, f.name) is not None}


def _split_list(values) -> list[str]:
    if values is None:
        return []
    if isinstance(values, str):
        values = [values]
    out = []
    for v in values:
        out.extend(p for p in v.replace(",", " ").split() if p)
    return out


def cmd_run(args) -> int:
    values = read_key_values(args.config) if args.config else {}
    values.update(_overrides(args))
    config = config_from_mapping(values)
    start = time.perf_counter()
    result = run_horizon(generate_scenario(config), config, args.policy)
    elapsed = time.perf_counter() - start
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            write_trace(result.trace, fh)
    m = result.metrics
    print(f"policy={result.policy}")
    for f in dataclasses.fields(m):
        print(f"{f.name}={getattr(m, f.name)!r}")
    print(f"runtime_s={elapsed:.3f}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    file_values = read_key_values(args.config) if args.config else {}
    sweep_values = {k: file_values.pop(k) for k in list(file_values) if k in SWEEP_KEYS}
    for key in SWEEP_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            sweep_values[key] = flag
    scenario_values = {**file_values, **_overrides(args)}
    for name, raw in scenario_values.items():
        coerce_field(name, raw)  # fail early with the field name

    axis = sweep_values.get("axis")
    if not axis:
        raise ConfigError("axis", f"required; choose from {', '.join(AXES)}")
    try:
        axis_values = tuple(float(v) for v in _split_list(sweep_values.get("axis_values")))
    except ValueError as exc:
        raise ConfigError("axis_values", str(exc)) from None
    policies = tuple(_split_list(sweep_values.get("policies")) or list(POLICIES))
    if "seeds" in sweep_values:
        try:
            seeds = tuple(int(s) for s in _split_list(sweep_values["seeds"]))
        except ValueError as exc:
            raise ConfigError("seeds", str(exc)) from None
    else:
        seeds = tuple(range(int(sweep_values.get("num_seeds", 50))))
    spec = SweepSpec(axis, axis_values, policies, seeds, scenario_values)
    result = run_sweep(spec, workers=int(sweep_values.get("workers", 1)))
    out = sweep_values.get("out") or "sweep.csv"
    emit_csv(result, out)
    print(f"wrote {len(result.rows)} rows to {out}")
    return 0


def cmd_oracle(args) -> int:
    """Cross-check the fast solvers against the brute-force references."""
    rng = np.random.default_rng(args.seed)
    ok = True

    worst = 0.0
    for _ in range(args.instances):
        k, n = rng.integers(1, 7, size=2)
        alpha = rng.uniform(1e-7, 1e-4, size=(k, n))
        w = 1.0 / alpha
        got = sum(w[a, b] for a, b in max_weight_matching(w))
        best, _ = oracles.brute_force_matching(w)
        worst = max(worst, abs(got - best) / best)
    passed = worst <= 1e-12
    ok &= passed
    print(f"{'PASS' if passed else 'FAIL'} matching vs enumeration: {args.instances} instances, max rel err {worst:.2e}")

    worst = 0.0
    for _ in range(args.instances // 10 or 1):
        size = int(rng.integers(1, 5))
        sensing_rate = rng.uniform(1e4, 1e6, size)
        rate = rng.uniform(1e6, 2e7, size)
        users = UserArrays(np.full(size, 100.0), np.full(size, 0.1), sensing_rate, np.full(size, 1e-12),
                           rng.uniform(1e-3, 1e-1, size))
        assignment = AssignmentResult([(i, i) for i in range(size)], rate, 1.0 / sensing_rate + 1.0 / rate)
        demand = float(rng.uniform(1e5, 1e7))
        result = allocate(assignment, users, demand)
        if not result.feasible:
            continue
        caps = users.energy_budget / (users.sensing_energy_per_bit + users.transmit_power / rate)
        ref, _ = oracles.minmax_allocation_lp(assignment.per_user_alpha, caps, demand)
        worst = max(worst, abs(result.system_latency - ref) / ref)
    passed = worst <= 1e-4
    ok &= passed
    print(f"{'PASS' if passed else 'FAIL'} allocation vs LP: max rel err {worst:.2e}")

    mismatches = 0
    for _ in range(args.instances // 10 or 1):
        count = int(rng.integers(1, 7))
        sizes = {i: float(rng.integers(1, 6)) for i in range(1, count + 1)}
        state = CacheState(capacity=float(rng.integers(5, 20)),
                           entries={i: CacheEntry(float(rng.uniform(0, 40)), s) for i, s in sizes.items() if i > 1})
        freq = {i: int(rng.integers(0, 10)) for i in sizes}
        task = TaskType(1, sizes[1])
        if sizes[1] > state.capacity:
            continue
        before = state.copy()
        before.entries[1] = CacheEntry(0.0, sizes[1])
        if before.used <= state.capacity:
            continue
        scores = before.posterior_scores(freq)
        key = {i: posterior_order_key(i, e, scores[i].posterior) for i, e in before.entries.items()}
        expected = oracles.exhaustive_bottleneck_eviction({i: e.size for i, e in before.entries.items()},
                                                          key, state.capacity)
        got = frozenset(state.commit_sensing_result(task, freq).evicted)
        mismatches += got != expected
    ok &= mismatches == 0
    print(f"{'PASS' if mismatches == 0 else 'FAIL'} cache eviction vs exhaustive search: {mismatches} mismatches")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcscache", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one horizon and print metrics")
    run.add_argument("--config", help="flat key = value scenario file")
    run.add_argument("--policy", default="proposed", choices=sorted(POLICIES))
    run.add_argument("--trace", help="write the per-slot trace CSV here")
    _add_scenario_flags(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="parameter sweep to CSV")
    sweep.add_argument("--config", help="flat key = value file with scenario and sweep keys")
    sweep.add_argument("--axis", choices=AXES)
    sweep.add_argument("--axis_values", "--axis-values", nargs="+")
    sweep.add_argument("--policies", nargs="+")
    sweep.add_argument("--seeds", nargs="+")
    sweep.add_argument("--num_seeds", "--num-seeds", type=int)
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--out")
    _add_scenario_flags(sweep)
    sweep.set_defaults(func=cmd_sweep)

    oracle = sub.add_parser("oracle", help="validate solvers against brute-force references")
    oracle.add_argument("--instances", type=int, default=2000)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid setting {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
