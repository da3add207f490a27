"""Independent reference solvers used to validate the fast paths.

These are deliberately naive: exhaustive enumeration, a generic LP solver
and direct subset search. They share no code with the routines they check.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog


def brute_force_matching(weights) -> tuple[float, list[tuple[int, int]]]:
    """Best matching of size ``min(K, N)`` by enumerating every injection."""
    w = np.asarray(weights, dtype=float)
    k, n = w.shape
    best, best_pairs = -np.inf, []
    if k <= n:
        for cols in itertools.permutations(range(n), k):
            total = sum(w[i, c] for i, c in enumerate(cols))
            if total > best:
                best, best_pairs = total, [(i, c) for i, c in enumerate(cols)]
    else:
        for rows in itertools.permutations(range(k), n):
            total = sum(w[r, j] for j, r in enumerate(rows))
            if total > best:
                best, best_pairs = total, sorted((r, j) for j, r in enumerate(rows))
    return float(best), best_pairs


def minmax_allocation_lp(alpha, caps, demand: float) -> tuple[float, np.ndarray]:
    """Solve ``min t`` s.t. ``alpha_k z_k <= t``, ``sum z = demand``, ``0 <= z <= cap``.

    Variables are rescaled to keep the LP well conditioned. Returns
    ``(t, z)``; raises ``ValueError`` when the caps cannot cover the demand.
    """
    alpha = np.asarray(alpha, dtype=float)
    caps = np.broadcast_to(np.asarray(caps, dtype=float), alpha.shape)
    n = len(alpha)
    # z = demand * x, t = demand * mean(alpha) * s
    t_scale = float(np.mean(alpha)) * demand
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.zeros((n, n + 1))
    a_ub[np.arange(n), np.arange(n)] = alpha * demand / t_scale
    a_ub[:, -1] = -1.0
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    bounds = [(0.0, min(cap / demand, 1e12)) for cap in caps] + [(0.0, None)]
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(n),
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise ValueError(f"LP failed: {res.message}")
    z = res.x[:n] * demand
    return float(np.max(alpha * z)), z


def minmax_allocation_grid(alpha, caps, demand: float, points: int = 200001) -> float:
    """Two-user min-max latency by dense grid over the first user's share."""
    a1, a2 = alpha
    c1, c2 = caps
    lo = max(0.0, demand - c2)
    hi = min(c1, demand)
    if lo > hi:
        raise ValueError("caps cannot cover the demand")
    z1 = np.linspace(lo, hi, points)
    return float(np.min(np.maximum(a1 * z1, a2 * (demand - z1))))


def exhaustive_min_mass_eviction(sizes: dict, posterior: dict, capacity: float) -> frozenset:
    """Eviction set discarding the least posterior mass that restores capacity.

    Ties go to the set with fewer members, then the lexicographically
    smallest sorted id tuple.
    """
    ids = sorted(sizes)
    total = sum(sizes.values())
    best_key, best_set = None, None
    for r in range(len(ids) + 1):
        for subset in itertools.combinations(ids, r):
            if total - sum(sizes[i] for i in subset) > capacity:
                continue
            key = (sum(posterior[i] for i in subset), r, subset)
            if best_key is None or key < best_key:
                best_key, best_set = key, frozenset(subset)
    return best_set


def exhaustive_bottleneck_eviction(sizes: dict, order_key: dict, capacity: float) -> frozenset:
    """Eviction set implied by the lowest achievable worst-evicted rank.

    Enumerates every subset whose removal restores capacity and finds the
    smallest possible maximum rank (by ``order_key``, low = evict first) of
    an evicted entry. Evicting an entry of that rank is unavoidable, and
    evicting in rank order stops exactly there, so the answer is every
    entry ranked at or below it.
    """
    ids = sorted(sizes, key=lambda i: order_key[i])
    rank = {i: r for r, i in enumerate(ids)}
    total = sum(sizes.values())
    if total <= capacity:
        return frozenset()
    best = None
    for r in range(1, len(ids) + 1):
        for subset in itertools.combinations(ids, r):
            if total - sum(sizes[i] for i in subset) <= capacity:
                worst = max(rank[i] for i in subset)
                best = worst if best is None else min(best, worst)
    return frozenset(ids[: best + 1])
