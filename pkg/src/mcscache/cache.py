"""Base-station result cache with age-of-information bookkeeping.

Every cached result ages by the duration of each elapsed slot and is purged
once its age reaches ``aoi_max``. A freshly sensed result enters with age 0.
When an insertion overflows the capacity, entries are scored by a posterior
that combines an age prior ``1/(age + 1)`` with a popularity likelihood
``ln(1 + F/V)`` and the lowest-scoring entries are evicted first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .scenario import TaskType


@dataclass
class CacheEntry:
    aoi: float
    size: float


@dataclass(frozen=True)
class PosteriorScore:
    prior: float
    likelihood: float
    posterior: float


@dataclass
class CommitOutcome:
    cached: bool  # the committed task is in the cache afterwards
    evicted: list[int] = field(default_factory=list)
    cacheable: bool = True


def age_prior(aoi: float) -> float:
    return 1.0 / (aoi + 1.0)


def popularity_likelihood(frequency: float, size: float) -> float:
    return math.log1p(frequency / size)


def posterior_order_key(entry_id: int, entry: CacheEntry, score: float):
    """Eviction priority: low posterior first, then larger size, then lower id."""
    return (score, -entry.size, entry_id)


def oldest_order_key(entry_id: int, entry: CacheEntry):
    """Eviction priority: high age first, then larger size, then lower id."""
    return (-entry.aoi, -entry.size, entry_id)


class CacheState:
    def __init__(self, capacity: float, aoi_max: float = math.inf, entries: Mapping[int, CacheEntry] | None = None):
        self.capacity = float(capacity)
        self.aoi_max = float(aoi_max)
        self.entries: dict[int, CacheEntry] = dict(entries or {})

    def __contains__(self, task_id) -> bool:
        return task_id in self.entries

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"CacheState(capacity={self.capacity:g}, used={self.used:g}, entries={self.entries})"

    @property
    def used(self) -> float:
        return sum(e.size for e in self.entries.values())

    def copy(self) -> "CacheState":
        return CacheState(self.capacity, self.aoi_max,
                          {i: CacheEntry(e.aoi, e.size) for i, e in self.entries.items()})

    def lookup(self, task_id: int) -> tuple[bool, float]:
        entry = self.entries.get(task_id)
        return (False, 0.0) if entry is None else (True, entry.aoi)

    def advance_aoi(self, elapsed: float) -> list[int]:
        """Age every entry by ``elapsed`` and purge those at or past ``aoi_max``.

        Returns the purged task ids in ascending order.
        """
        if elapsed < 0:
            raise ValueError("elapsed time must be non-negative")
        purged = []
        for task_id in sorted(self.entries):
            entry = self.entries[task_id]
            entry.aoi += elapsed
            if entry.aoi >= self.aoi_max:
                purged.append(task_id)
        for task_id in purged:
            del self.entries[task_id]
        return purged

    def posterior_scores(self, frequencies: Mapping[int, float]) -> dict[int, PosteriorScore]:
        if not self.entries:
            raise ValueError("posterior is undefined for an empty cache")
        raw = {}
        for task_id, entry in self.entries.items():
            prior = age_prior(entry.aoi)
            likelihood = popularity_likelihood(frequencies.get(task_id, 0), entry.size)
            raw[task_id] = (prior, likelihood, prior * likelihood)
        total = sum(w for _, _, w in raw.values())
        if total > 0:
            return {i: PosteriorScore(p, l, w / total) for i, (p, l, w) in raw.items()}
        uniform = 1.0 / len(raw)
        return {i: PosteriorScore(p, l, uniform) for i, (p, l, _) in raw.items()}

    def _insert_fresh(self, task: TaskType) -> CommitOutcome | None:
        """Handle the cases that need no eviction; ``None`` means overflow."""
        if task.size > self.capacity:
            return CommitOutcome(cached=False, cacheable=False)
        existing = self.entries.get(task.task_id)
        if existing is not None:
            # A newer result supersedes the old copy in place.
            existing.aoi = 0.0
            existing.size = float(task.size)
            if self.used <= self.capacity:
                return CommitOutcome(cached=True)
            return None
        if self.used + task.size <= self.capacity:
            self.entries[task.task_id] = CacheEntry(0.0, float(task.size))
            return CommitOutcome(cached=True)
        self.entries[task.task_id] = CacheEntry(0.0, float(task.size))
        return None

    def _evict_until_fits(self, key: Callable[[int], object]) -> list[int]:
        evicted = []
        for task_id in sorted(self.entries, key=key):
            if self.used <= self.capacity:
                break
            del self.entries[task_id]
            evicted.append(task_id)
        return evicted

    def commit_sensing_result(self, task: TaskType, frequencies: Mapping[int, float]) -> CommitOutcome:
        """Store a freshly sensed result, evicting by posterior if the cache overflows.

        The new result is scored together with the existing entries, so it can
        itself be the one dropped.
        """
        outcome = self._insert_fresh(task)
        if outcome is not None:
            return outcome
        scores = self.posterior_scores(frequencies)
        evicted = self._evict_until_fits(
            lambda i: posterior_order_key(i, self.entries[i], scores[i].posterior))
        return CommitOutcome(cached=task.task_id in self.entries, evicted=evicted)

    def commit_replace_oldest(self, task: TaskType) -> CommitOutcome:
        """Store a freshly sensed result, evicting the oldest entries on overflow."""
        outcome = self._insert_fresh(task)
        if outcome is not None:
            return outcome
        evicted = self._evict_until_fits(lambda i: oldest_order_key(i, self.entries[i]))
        return CommitOutcome(cached=task.task_id in self.entries, evicted=evicted)

    # -- line-oriented snapshots: "task_id aoi size" per entry ----------

    def snapshot(self) -> str:
        return "".join(f"{i} {e.aoi!r} {e.size!r}\n" for i, e in sorted(self.entries.items()))

    @classmethod
    def from_snapshot(cls, text: str | Iterable[str], capacity: float, aoi_max: float = math.inf) -> "CacheState":
        lines = text.splitlines() if isinstance(text, str) else text
        entries = {}
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            task_id, aoi, size = line.split()
            entries[int(task_id)] = CacheEntry(float(aoi), float(size))
        return cls(capacity, aoi_max, entries)
