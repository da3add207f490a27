"""Policy building blocks and the named comparison policies.

A policy is four independent choices: how subchannels are assigned, how
the task bits are split, when to re-sense, and how the cache is managed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import AssignmentResult, result_from_pairs
from .cache import CacheState, CommitOutcome
from .channel import ChannelRealization
from .scenario import TaskType

SUBCHANNEL_STRATEGIES = ("hungarian", "greedy_best_gain", "random")
TASK_SPLITS = ("equal_time", "uniform", "gain_fractional")
SENSING_RULES = ("age_threshold", "random_bernoulli", "always_sense")
CACHE_RULES = ("bayesian", "replace_oldest", "none")

# Alternative spellings accepted for interoperability with external configs.
_ALIASES = {"lemma1": "equal_time", "definition4": "age_threshold"}


@dataclass(frozen=True)
class PolicySpec:
    subchannel_strategy: str
    task_split: str
    sensing_rule: str
    cache_rule: str
    name: str = ""

    def __post_init__(self):
        for attr in ("task_split", "sensing_rule"):
            value = getattr(self, attr)
            if value in _ALIASES:
                object.__setattr__(self, attr, _ALIASES[value])
        for value, allowed in (
            (self.subchannel_strategy, SUBCHANNEL_STRATEGIES),
            (self.task_split, TASK_SPLITS),
            (self.sensing_rule, SENSING_RULES),
            (self.cache_rule, CACHE_RULES),
        ):
            if value not in allowed:
                raise ValueError(f"{value!r} is not one of {allowed}")


POLICIES = {
    "proposed": PolicySpec("hungarian", "equal_time", "age_threshold", "bayesian", "proposed"),
    "b1": PolicySpec("greedy_best_gain", "uniform", "random_bernoulli", "replace_oldest", "b1"),
    "b2": PolicySpec("random", "gain_fractional", "random_bernoulli", "replace_oldest", "b2"),
    "b3": PolicySpec("greedy_best_gain", "gain_fractional", "random_bernoulli", "replace_oldest", "b3"),
    "b4": PolicySpec("greedy_best_gain", "gain_fractional", "age_threshold", "bayesian", "b4"),
    "b5": PolicySpec("hungarian", "equal_time", "always_sense", "none", "b5"),
}

PROPOSED = POLICIES["proposed"]


def get_policy(name: str | PolicySpec) -> PolicySpec:
    if isinstance(name, PolicySpec):
        return name
    try:
        return POLICIES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}") from None


def greedy_best_gain_pairs(gains: np.ndarray) -> list[tuple[int, int]]:
    """Each subchannel in index order goes to the free user with the highest gain."""
    k, n = gains.shape
    free = np.ones(k, dtype=bool)
    pairs = []
    for sub in range(min(n, k)):
        col = np.where(free, gains[:, sub], -np.inf)
        user = int(np.argmax(col))
        free[user] = False
        pairs.append((user, sub))
    return pairs


def greedy_best_gain_assign(channels: ChannelRealization, alpha: np.ndarray, rates: np.ndarray | None = None) -> AssignmentResult:
    return result_from_pairs(greedy_best_gain_pairs(channels.gains), alpha, rates)


def random_pairs(num_users: int, num_subchannels: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniformly random injective user/subchannel pairing of size ``min(K, N)``."""
    if num_users >= num_subchannels:
        users = rng.permutation(num_users)[:num_subchannels]
        return [(int(u), n) for n, u in enumerate(users)]
    subs = rng.permutation(num_subchannels)[:num_users]
    return [(k, int(s)) for k, s in enumerate(subs)]


def random_assign(channels: ChannelRealization, alpha: np.ndarray, rng: np.random.Generator,
                  rates: np.ndarray | None = None) -> AssignmentResult:
    k, n = channels.shape
    return result_from_pairs(random_pairs(k, n, rng), alpha, rates)


def uniform_split(demand: float, matching_size: int) -> np.ndarray:
    """Every matched user takes ``V / N_m`` bits (energy clipping happens later)."""
    if matching_size < 1:
        raise ValueError("need at least one matched user")
    return np.full(matching_size, demand / matching_size)


def gain_fractional_split(demand: float, gains) -> np.ndarray:
    """Bits proportional to each matched user's gain on its own subchannel."""
    g = np.asarray(gains, dtype=float)
    total = g.sum()
    if not total > 0:
        raise ValueError("gains must have a positive sum")
    return demand * g / total


def replace_oldest(cache_state: CacheState, task: TaskType) -> CommitOutcome:
    return cache_state.commit_replace_oldest(task)
