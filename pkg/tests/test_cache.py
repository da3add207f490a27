import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcscache.cache import CacheEntry, CacheState, age_prior, posterior_order_key
from mcscache.oracles import exhaustive_bottleneck_eviction, exhaustive_min_mass_eviction
from mcscache.scenario import TaskType


def test_uncached_task_reads_as_zero_age():
    state = CacheState(1e8, 50)
    assert state.lookup(3) == (False, 0.0)
    state.advance_aoi(1.0)
    assert state.lookup(3) == (False, 0.0)


def test_age_advances_by_elapsed_time():
    state = CacheState(1e8, 50, {1: CacheEntry(5.0, 1e7)})
    assert state.advance_aoi(1.0) == []
    assert state.lookup(1) == (True, 6.0)


def test_entry_reaching_ceiling_is_purged():
    state = CacheState(1e8, 50, {1: CacheEntry(49.5, 1e7), 2: CacheEntry(10.0, 1e7)})
    assert state.advance_aoi(1.0) == [1]
    assert 1 not in state and 2 in state


def test_purge_at_exact_ceiling():
    state = CacheState(1e8, 50, {1: CacheEntry(49.0, 1e7)})
    assert state.advance_aoi(1.0) == [1]


def test_negative_elapsed_rejected():
    with pytest.raises(ValueError):
        CacheState(1e8).advance_aoi(-1.0)


def test_lookup_after_commit_and_ageing():
    state = CacheState(1e8, 50)
    state.commit_sensing_result(TaskType(4, 1e7), {4: 1})
    assert state.lookup(4) == (True, 0.0)
    state.entries[4].aoi = 3.0
    state.advance_aoi(2.0)
    assert state.lookup(4) == (True, 5.0)


def test_single_entry_posterior_is_one():
    state = CacheState(1e8, entries={1: CacheEntry(4.0, 1e7)})
    assert state.posterior_scores({1: 3})[1].posterior == 1.0


def test_identical_entries_share_posterior():
    state = CacheState(1e8, entries={1: CacheEntry(2.0, 1e7), 2: CacheEntry(2.0, 1e7)})
    scores = state.posterior_scores({1: 4, 2: 4})
    assert scores[1].posterior == scores[2].posterior == 0.5


def test_posterior_weighs_age():
    state = CacheState(1e8, entries={1: CacheEntry(1.0, 1e7), 2: CacheEntry(3.0, 1e7)})
    scores = state.posterior_scores({1: 10, 2: 10})
    assert scores[1].posterior == pytest.approx(2 / 3, rel=1e-12)
    assert scores[2].posterior == pytest.approx(1 / 3, rel=1e-12)
    assert scores[1].prior == 0.5 and scores[2].prior == 0.25
    assert scores[1].likelihood == pytest.approx(math.log(1 + 10 / 1e7), rel=1e-12)


def test_posterior_uniform_when_nothing_requested():
    state = CacheState(1e8, entries={1: CacheEntry(1.0, 1e7), 2: CacheEntry(3.0, 2e7), 3: CacheEntry(0.0, 1e6)})
    scores = state.posterior_scores({})
    assert all(s.posterior == pytest.approx(1 / 3) for s in scores.values())


def test_posterior_of_empty_cache_rejected():
    with pytest.raises(ValueError):
        CacheState(1e8).posterior_scores({})


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1e3))
def test_prior_monotone_in_age(a, b):
    lo, hi = sorted((a, b))
    assert age_prior(hi) <= age_prior(lo)


def test_insert_into_empty_cache():
    state = CacheState(1e8, 50)
    outcome = state.commit_sensing_result(TaskType(1, 1e7), {1: 1})
    assert outcome.cached and outcome.evicted == []
    assert state.lookup(1) == (True, 0.0)


def test_refresh_existing_task_in_full_cache():
    state = CacheState(2e7, 50, {1: CacheEntry(7.0, 1e7), 2: CacheEntry(3.0, 1e7)})
    outcome = state.commit_sensing_result(TaskType(1, 1e7), {1: 2, 2: 2})
    assert outcome.cached and outcome.evicted == []
    assert state.entries[1].aoi == 0.0 and state.entries[2].aoi == 3.0
    assert state.used == 2e7


def test_oldest_unpopular_entry_is_evicted():
    state = CacheState(2e7, 50, {1: CacheEntry(10.0, 1e7), 2: CacheEntry(1.0, 1e7)})
    freq = {1: 1, 2: 1, 3: 5}
    before = state.copy()
    before.entries[3] = CacheEntry(0.0, 1e7)
    posterior = {i: s.posterior for i, s in before.posterior_scores(freq).items()}
    sizes = {i: e.size for i, e in before.entries.items()}
    assert exhaustive_min_mass_eviction(sizes, posterior, 2e7) == {1}

    outcome = state.commit_sensing_result(TaskType(3, 1e7), freq)
    assert outcome.evicted == [1]
    assert sorted(state.entries) == [2, 3]


def test_new_result_can_lose_to_incumbents():
    state = CacheState(2e7, 50, {1: CacheEntry(0.0, 1e7), 2: CacheEntry(0.0, 1e7)})
    outcome = state.commit_sensing_result(TaskType(3, 1e7), {1: 50, 2: 50, 3: 1})
    assert outcome.evicted == [3] and not outcome.cached
    assert sorted(state.entries) == [1, 2]


def test_oversized_task_is_not_cacheable():
    state = CacheState(1e7, 50, {1: CacheEntry(2.0, 5e6)})
    outcome = state.commit_sensing_result(TaskType(2, 2e7), {2: 1})
    assert not outcome.cacheable and not outcome.cached
    assert list(state.entries) == [1] and state.entries[1].aoi == 2.0


def test_posterior_ties_evict_larger_then_lower_id():
    state = CacheState(3e7, 50, {1: CacheEntry(0.0, 1e7), 2: CacheEntry(0.0, 2e7)})
    # nothing has been requested, so every posterior is uniform
    outcome = state.commit_sensing_result(TaskType(3, 1e7), {})
    assert outcome.evicted == [2]


def test_snapshot_round_trip():
    state = CacheState(5e7, 50, {3: CacheEntry(1.25, 1e7), 1: CacheEntry(0.1, 7.5e6)})
    text = state.snapshot()
    assert text.splitlines()[0].split() == ["1", "0.1", "7500000.0"]
    restored = CacheState.from_snapshot(text, 5e7, 50)
    assert restored.entries == state.entries


def random_commit(state, rng, max_id, sizes, freq):
    task_id = int(rng.integers(1, max_id + 1))
    freq[task_id] = freq.get(task_id, 0) + 1
    return TaskType(task_id, sizes[task_id])


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**31), st.booleans())
def test_random_sequences_keep_invariants(seed, equal_sizes):
    rng = np.random.default_rng(seed)
    capacity = float(rng.integers(3, 15))
    aoi_max = float(rng.uniform(2, 20))
    sizes = {i: (2.0 if equal_sizes else float(rng.integers(1, 6))) for i in range(1, 8)}
    state = CacheState(capacity, aoi_max)
    freq = {}
    for _ in range(20):
        state.advance_aoi(float(rng.exponential(1.0)))
        assert all(0 <= e.aoi < aoi_max for e in state.entries.values())
        task = random_commit(state, rng, 7, sizes, freq)
        if task.task_id in state.entries or state.used + task.size <= capacity or task.size > capacity:
            state.commit_sensing_result(task, freq)
        else:
            pending = state.copy()
            pending.entries[task.task_id] = CacheEntry(0.0, task.size)
            scores = pending.posterior_scores(freq)
            assert math.fsum(s.posterior for s in scores.values()) == pytest.approx(1.0, abs=1e-9)
            key = {i: posterior_order_key(i, e, scores[i].posterior) for i, e in pending.entries.items()}
            member_sizes = {i: e.size for i, e in pending.entries.items()}
            expected = exhaustive_bottleneck_eviction(member_sizes, key, capacity)
            evicted = frozenset(state.commit_sensing_result(task, freq).evicted)
            assert evicted == expected
            if equal_sizes:
                posterior = {i: s.posterior for i, s in scores.items()}
                assert evicted == exhaustive_min_mass_eviction(member_sizes, posterior, capacity)
        assert state.used <= capacity
