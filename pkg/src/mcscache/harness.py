"""Parameter sweeps over seeds and policies, aggregated to plot-ready CSV."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import get_policy
from .policy import RunMetrics, run_paired
from .scenario import ConfigError, ScenarioConfig, config_from_mapping, generate_scenario

AXES = ("transmit_power", "num_users", "num_subchannels", "task_size")

CSV_COLUMNS = ("axis", "policy", "mean_objective", "sem", "hit_rate", "mean_latency", "mean_aoi", "infeasible_slots")


def apply_axis(config: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "transmit_power":
        return config.replace(power_range=(float(value), float(value)))
    if axis == "task_size":
        return config.replace(task_size_range=(float(value), float(value)))
    if axis in ("num_users", "num_subchannels"):
        if float(value) != int(value):
            raise ConfigError(axis, f"must be an integer, got {value!r}")
        return config.replace(**{axis: int(value)})
    raise ConfigError("axis", f"unknown axis {axis!r}; choose from {', '.join(AXES)}")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    axis_values: tuple[float, ...]
    policies: tuple[str, ...]
    seeds: tuple[int, ...]
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError("axis", f"unknown axis {self.axis!r}; choose from {', '.join(AXES)}")
        if not self.axis_values:
            raise ConfigError("axis_values", "must not be empty")
        if list(self.axis_values) != sorted(self.axis_values):
            raise ConfigError("axis_values", "must be sorted ascending")
        if not self.seeds:
            raise ConfigError("seeds", "need at least one seed")
        for name in self.policies:
            try:
                get_policy(name)
            except ValueError as exc:
                raise ConfigError("policies", str(exc)) from None

    def base_config(self) -> ScenarioConfig:
        return config_from_mapping(self.overrides)

    def configs(self) -> list[tuple[float, ScenarioConfig]]:
        base = self.base_config()
        return [(value, apply_axis(base, self.axis, value)) for value in self.axis_values]


@dataclass
class SweepRow:
    axis_value: float
    policy: str
    mean_objective: float
    sem: float
    hit_rate: float
    mean_latency: float
    mean_aoi: float
    infeasible_slots: int
    objectives: list[float] = field(default_factory=list, repr=False)


@dataclass
class SweepResult:
    axis: str
    rows: list[SweepRow]

    def row(self, axis_value, policy) -> SweepRow:
        for r in self.rows:
            if r.axis_value == axis_value and r.policy == policy:
                return r
        raise KeyError((axis_value, policy))

    def series(self, policy: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.policy == policy]
        return np.array([r.axis_value for r in rows]), np.array([r.mean_objective for r in rows])


def _run_cell(args) -> dict[str, RunMetrics]:
    config, seed, policies = args
    config = config.replace(rng_seed=seed)
    results = run_paired(generate_scenario(config), config, policies)
    return {name: res.metrics for name, res in results.items()}


def _nanmean(values) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return float(np.mean(finite)) if finite else math.nan


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every policy on every seed at every axis value and aggregate.

    All policies of one (axis value, seed) cell run in lockstep on the same
    draws. Results are reduced in (axis value, policy, seed) order whatever
    order the cells finish in.
    """
    configs = spec.configs()
    policies = [get_policy(p).name for p in spec.policies]
    if not policies:
        return SweepResult(spec.axis, [])
    cells = [(config, seed, policies) for _, config in configs for seed in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_cell, cells))
    else:
        outputs = [_run_cell(cell) for cell in cells]

    rows = []
    n_seeds = len(spec.seeds)
    for i, (value, _) in enumerate(configs):
        chunk = outputs[i * n_seeds:(i + 1) * n_seeds]
        for name in policies:
            metrics = [out[name] for out in chunk]
            objectives = [m.mean_objective for m in metrics]
            sem = float(np.std(objectives, ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
            rows.append(SweepRow(
                axis_value=value,
                policy=name,
                mean_objective=float(np.mean(objectives)),
                sem=sem,
                hit_rate=float(np.mean([m.cache_hit_rate for m in metrics])),
                mean_latency=_nanmean([m.mean_latency_on_sense for m in metrics]),
                mean_aoi=_nanmean([m.mean_aoi_on_hit for m in metrics]),
                infeasible_slots=int(sum(m.infeasible_slots for m in metrics)),
                objectives=objectives,
            ))
    return SweepResult(spec.axis, rows)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in result.rows:
            writer.writerow([_fmt(r.axis_value), r.policy, _fmt(r.mean_objective), _fmt(r.sem),
                             _fmt(r.hit_rate), _fmt(r.mean_latency), _fmt(r.mean_aoi), str(r.infeasible_slots)])
    return path


def figure_sweep_specs(seeds: Sequence[int], policies: Sequence[str] = ("proposed", "b1", "b2", "b3", "b4", "b5"),
                       **overrides) -> dict[str, SweepSpec]:
    """The four standard sweeps over power, users, subchannels and task size (K=30, N=20 unless swept)."""
    seeds, policies = tuple(seeds), tuple(policies)
    common = {"num_users": 30, "num_subchannels": 20, **overrides}
    return {
        "power": SweepSpec("transmit_power", (0.1, 0.125, 0.15, 0.175, 0.2), policies, seeds, common),
        "users": SweepSpec("num_users", (25.0, 30.0, 35.0, 40.0, 45.0), policies, seeds, common),
        "subchannels": SweepSpec("num_subchannels", (6.0, 10.0, 14.0, 18.0, 22.0, 26.0), policies, seeds,
                                {**common, "power_range": (0.1, 0.1)}),
        "task_size": SweepSpec("task_size", (0.5e7, 0.75e7, 1.0e7, 1.25e7, 1.5e7), policies, seeds,
                              {**common, "power_range": (0.1, 0.1)}),
    }
