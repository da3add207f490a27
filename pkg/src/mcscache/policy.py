"""Per-slot decision logic and the horizon loop.

Each slot: solve the latency sub-problem for the published task (always,
because the reuse test needs the would-be latency), decide between reusing
the cached result and re-sensing, charge the slot cost, and update the
cache. Costs are ``beta1 * D`` when sensing and ``beta2 * age`` on reuse.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .allocation import AllocationResult, allocate, allocate_fixed
from .assignment import AssignmentResult, result_from_pairs, solve_matching
from .baselines import (
    PROPOSED,
    PolicySpec,
    gain_fractional_split,
    get_policy,
    greedy_best_gain_pairs,
    random_pairs,
    uniform_split,
)
from .cache import CacheState
from .channel import ChannelRealization, draw_channels, rate_matrix
from .scenario import (
    STREAM_CHANNEL,
    STREAM_POLICY,
    STREAM_USER_REDRAW,
    Scenario,
    ScenarioConfig,
    TaskType,
    UserArrays,
    draw_user_parameters,
    make_rng,
)


def decide_sensing(aoi: float, cached: bool, latency: float, beta: float, aoi_max: float) -> int:
    """1 to re-sense, 0 to reuse the cached result.

    Re-sense when nothing is cached, or when the cached age is within the
    ceiling and has reached ``beta`` times the would-be sensing latency.
    """
    if not cached:
        return 1
    if 0.0 <= aoi <= aoi_max and aoi >= beta * latency:
        return 1
    return 0


class SlotEnvironment:
    """Everything a policy sees in one slot; shared by paired policies."""

    def __init__(self, users, channels: ChannelRealization, config: ScenarioConfig):
        self.users = UserArrays.from_users(users)
        self.channels = channels
        self.rates = rate_matrix(self.users, channels, config.bandwidth, config.noise_density)
        self.alpha = 1.0 / self.users.sensing_rate[:, None] + 1.0 / self.rates
        self._optimal: AssignmentResult | None = None
        self._greedy: AssignmentResult | None = None

    def optimal_assignment(self) -> AssignmentResult:
        if self._optimal is None:
            self._optimal = solve_matching(self.alpha, self.rates)
        return self._optimal

    def greedy_assignment(self) -> AssignmentResult:
        if self._greedy is None:
            self._greedy = result_from_pairs(greedy_best_gain_pairs(self.channels.gains), self.alpha, self.rates)
        return self._greedy


@dataclass
class SlotDecision:
    slot: int
    task_id: int
    sensing: int  # 1 = re-sense, 0 = reuse
    cached: bool  # task was cached at slot start (after purge)
    aoi: float  # start-of-slot age of the cached copy, 0 if absent
    latency: float  # would-be sensing latency computed before deciding
    slot_cost: float
    slot_duration: float
    assignment: AssignmentResult | None = field(default=None, repr=False)
    allocation: AllocationResult | None = field(default=None, repr=False)
    feasible: bool = True
    shortfall: float = 0.0
    evicted: list[int] = field(default_factory=list)
    purged: list[int] = field(default_factory=list)
    cache_bits: float = 0.0


def _plan(policy: PolicySpec, task: TaskType, env: SlotEnvironment, config: ScenarioConfig,
          rng: np.random.Generator | None) -> tuple[AssignmentResult, AllocationResult]:
    if policy.subchannel_strategy == "hungarian":
        assignment = env.optimal_assignment()
    elif policy.subchannel_strategy == "greedy_best_gain":
        assignment = env.greedy_assignment()
    else:
        k, n = env.alpha.shape
        assignment = result_from_pairs(random_pairs(k, n, rng), env.alpha, env.rates)

    if policy.task_split == "equal_time":
        allocation = allocate(assignment, env.users, task.size, config.allocation_mode)
    elif policy.task_split == "uniform":
        allocation = allocate_fixed(assignment, env.users, uniform_split(task.size, len(assignment)), task.size)
    else:
        gains = env.channels.gains[assignment.users, assignment.subchannels]
        allocation = allocate_fixed(assignment, env.users, gain_fractional_split(task.size, gains), task.size)
    return assignment, allocation


def run_slot(
    slot_index: int,
    task: TaskType,
    users,
    channels: ChannelRealization,
    cache_state: CacheState,
    frequencies: Mapping[int, float],
    config: ScenarioConfig,
    policy: PolicySpec | str = PROPOSED,
    rng: np.random.Generator | None = None,
    env: SlotEnvironment | None = None,
) -> tuple[SlotDecision, CacheState]:
    """Run one slot. ``cache_state`` must already be aged and purged for this slot.

    The cache is updated in place and also returned.
    """
    policy = get_policy(policy)
    env = env or SlotEnvironment(users, channels, config)
    cached, aoi = cache_state.lookup(task.task_id)

    assignment, allocation = _plan(policy, task, env, config, rng)
    latency = allocation.system_latency

    if policy.sensing_rule == "age_threshold":
        sensing = decide_sensing(aoi, cached, latency, config.decision_threshold, config.aoi_max)
    elif policy.sensing_rule == "always_sense" or not cached:
        sensing = 1
    else:
        if rng is None:
            raise ValueError("random sensing needs a random generator")
        sensing = int(rng.random() < config.resense_frequency)

    if sensing == 0:
        decision = SlotDecision(
            slot=slot_index, task_id=task.task_id, sensing=0, cached=cached, aoi=aoi, latency=latency,
            slot_cost=config.weight_aoi * aoi,
            slot_duration=_duration(config, None),
            cache_bits=cache_state.used,
        )
        return decision, cache_state

    evicted: list[int] = []
    if policy.cache_rule == "bayesian":
        evicted = cache_state.commit_sensing_result(task, frequencies).evicted
    elif policy.cache_rule == "replace_oldest":
        evicted = cache_state.commit_replace_oldest(task).evicted
    decision = SlotDecision(
        slot=slot_index, task_id=task.task_id, sensing=1, cached=cached, aoi=aoi, latency=latency,
        slot_cost=config.weight_latency * latency,
        slot_duration=_duration(config, latency),
        assignment=assignment, allocation=allocation,
        feasible=allocation.feasible, shortfall=allocation.shortfall,
        evicted=evicted, cache_bits=cache_state.used,
    )
    return decision, cache_state


def _duration(config: ScenarioConfig, latency: float | None) -> float:
    if config.slot_duration_mode == "fixed":
        return config.fixed_slot_duration
    return config.cache_hit_slot_duration if latency is None else latency


class SlotRecord(NamedTuple):
    t: int
    task_id: int
    l: int
    latency: float
    aoi: float
    slot_cost: float
    cache_bits: float
    evictions: int
    cached: int
    feasible: int


TRACE_COLUMNS = SlotRecord._fields


@dataclass
class RunMetrics:
    mean_objective: float
    cache_hit_rate: float
    mean_latency_on_sense: float
    mean_aoi_on_hit: float
    infeasible_slots: int
    num_slots: int


@dataclass
class HorizonResult:
    policy: str
    metrics: RunMetrics
    trace: list[SlotRecord]


def summarize(trace: Sequence[SlotRecord]) -> RunMetrics:
    costs = np.array([r.slot_cost for r in trace], dtype=float)
    sense = [r for r in trace if r.l == 1]
    hits = [r for r in trace if r.l == 0]
    return RunMetrics(
        mean_objective=float(math.fsum(costs) / len(costs)) if len(costs) else math.nan,
        cache_hit_rate=len(hits) / len(trace) if trace else math.nan,
        mean_latency_on_sense=float(np.mean([r.latency for r in sense])) if sense else math.nan,
        mean_aoi_on_hit=float(np.mean([r.aoi for r in hits])) if hits else math.nan,
        infeasible_slots=sum(1 for r in sense if not r.feasible),
        num_slots=len(trace),
    )


class _PolicyRun:
    def __init__(self, policy: PolicySpec, config: ScenarioConfig, rng: np.random.Generator):
        self.policy = policy
        self.config = config
        self.rng = rng
        self.cache = CacheState(config.cache_capacity, config.aoi_max)
        self.elapsed = 0.0
        self.trace: list[SlotRecord] = []

    def step(self, t, task, env, frequencies, keep=None):
        purged = self.cache.advance_aoi(self.elapsed)
        decision, _ = run_slot(t, task, env.users, env.channels, self.cache, frequencies, self.config,
                               self.policy, self.rng, env)
        decision.purged = purged
        self.elapsed = decision.slot_duration
        self.trace.append(SlotRecord(
            t, task.task_id, decision.sensing, decision.latency, decision.aoi, decision.slot_cost,
            decision.cache_bits, len(purged) + len(decision.evicted), int(decision.cached), int(decision.feasible),
        ))
        if keep is not None:
            keep.append(decision)


def run_paired(scenario: Scenario, config: ScenarioConfig, policies: Iterable[PolicySpec | str],
               decisions: dict | None = None) -> dict[str, HorizonResult]:
    """Run several policies in lockstep over identical channel and task draws.

    Pass a dict as ``decisions`` to also collect the full per-slot
    ``SlotDecision`` objects, keyed by policy name.
    """
    specs = [get_policy(p) for p in policies]
    users, tasks, schedule = scenario
    task_by_id = {task.task_id: task for task in tasks}
    arrays = UserArrays.from_users(users)
    channel_rng = make_rng(config.rng_seed, STREAM_CHANNEL)
    redraw_rng = make_rng(config.rng_seed, STREAM_USER_REDRAW)
    # One policy stream per policy name so a policy's random choices do not
    # depend on which other policies share the run.
    runs = [_PolicyRun(spec, config, np.random.default_rng(
        [config.rng_seed, STREAM_POLICY, _stable_hash(spec.name or repr(spec))])) for spec in specs]
    if decisions is not None:
        for run in runs:
            decisions.setdefault(run.policy.name, [])
    frequencies: Counter = Counter()
    for t, task_id in enumerate(schedule, start=1):
        if config.per_slot_user_params:
            power, rate, energy, budget = draw_user_parameters(config, redraw_rng, len(arrays))
            arrays = UserArrays(arrays.distance, power, rate, energy, budget)
        channels = draw_channels(arrays, config.num_subchannels, channel_rng)
        env = SlotEnvironment(arrays, channels, config)
        frequencies[task_id] += 1
        task = task_by_id[task_id]
        for run in runs:
            run.step(t, task, env, frequencies, None if decisions is None else decisions[run.policy.name])
    return {run.policy.name: HorizonResult(run.policy.name, summarize(run.trace), run.trace) for run in runs}


def run_horizon(scenario: Scenario, config: ScenarioConfig, policy: PolicySpec | str = PROPOSED) -> HorizonResult:
    spec = get_policy(policy)
    return run_paired(scenario, config, [spec])[spec.name]


def _stable_hash(text: str) -> int:
    # hash() is salted per process; this must be reproducible.
    value = 0
    for ch in text.encode():
        value = (value * 131 + ch) % (2**31 - 1)
    return value


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


def write_trace(trace: Iterable[SlotRecord], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for record in trace:
        writer.writerow([_fmt(v) for v in record])
