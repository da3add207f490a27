"""User/subchannel assignment as maximum-weight bipartite matching.

With the equal-completion-time split the slot latency is
``V / sum(1/alpha)`` over matched pairs, so the best assignment is the
matching that maximizes the summed per-pair throughput ``1/alpha[k, n]``.
That is solved here with the Hungarian algorithm (shortest augmenting
paths with dual potentials), O(n^2 m) for an n x m problem with n <= m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, rate_matrix
from .scenario import UserArrays


@dataclass
class AssignmentResult:
    matching: list[tuple[int, int]]  # (user, subchannel), sorted by user
    per_user_rate: np.ndarray = field(repr=False)  # bit/s, aligned with matching
    per_user_alpha: np.ndarray = field(repr=False)  # s/bit, aligned with matching
    objective_weight_sum: float = 0.0  # sum of 1/alpha, bit/s

    @property
    def users(self) -> np.ndarray:
        return np.array([k for k, _ in self.matching], dtype=int)

    @property
    def subchannels(self) -> np.ndarray:
        return np.array([n for _, n in self.matching], dtype=int)

    @property
    def selected_set(self) -> set[int]:
        return {k for k, _ in self.matching}

    def __len__(self):
        return len(self.matching)

    @classmethod
    def empty(cls) -> "AssignmentResult":
        return cls([], np.zeros(0), np.zeros(0), 0.0)


def build_alpha(users, channels: ChannelRealization, bandwidth: float, noise_density: float) -> np.ndarray:
    """Per-bit processing time ``1/o_k + 1/r_kn`` for every user/subchannel pair."""
    arrays = UserArrays.from_users(users)
    rates = rate_matrix(arrays, channels, bandwidth, noise_density)
    if np.any(~(rates > 0)):
        raise ValueError("non-positive subchannel rate")
    return 1.0 / arrays.sensing_rate[:, None] + 1.0 / rates


def _min_cost_rows(cost: np.ndarray) -> np.ndarray:
    """Column assigned to each row of ``cost`` (rows <= cols), minimum total cost.

    Rows are added one at a time. Each addition is a Dijkstra search for the
    cheapest augmenting path in reduced costs (dual potentials keep them
    non-negative); every search step scans all columns once.
    """
    n, m = cost.shape
    cost = np.ascontiguousarray(cost, dtype=float)
    u = np.zeros(n)
    v = np.zeros(m)
    row_of = np.full(m, -1, dtype=np.intp)
    col_of = np.full(n, -1, dtype=np.intp)
    inf = np.inf
    shortest = np.empty(m)
    frontier = np.empty(m)  # shortest[] restricted to unscanned columns
    path = np.empty(m, dtype=np.intp)
    for root in range(n):
        shortest.fill(inf)
        frontier.fill(inf)
        scanned_rows = []
        scanned_cols = []
        labels = []
        reach = 0.0
        i = root
        while True:
            scanned_rows.append(i)
            dist = cost[i] - v
            dist += reach - u[i]
            closer = dist < shortest
            np.copyto(shortest, dist, where=closer)
            np.copyto(frontier, dist, where=closer)
            np.copyto(path, i, where=closer)
            j = int(frontier.argmin())
            reach = frontier[j]
            if reach == inf:
                raise ValueError("no augmenting path")
            # Pin the scanned column so rounding in later rows cannot relabel it.
            frontier[j] = inf
            shortest[j] = -inf
            scanned_cols.append(j)
            labels.append(reach)
            if row_of[j] < 0:
                break
            i = row_of[j]
        # Dual update keeps every reduced cost non-negative and matched
        # edges tight.
        label_of = dict(zip(scanned_cols, labels))
        u[root] += reach
        for r in scanned_rows[1:]:
            u[r] += reach - label_of[col_of[r]]
        v[scanned_cols] -= reach - np.array(labels)
        while True:
            r = path[j]
            row_of[j] = r
            col_of[r], j = j, col_of[r]
            if r == root:
                break
    return col_of


def max_weight_matching(weights: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-weight matching of size ``min(K, N)`` for a K x N weight matrix.

    Unbalanced problems are solved with the smaller side as rows, which is
    equivalent to padding with zero-weight dummy vertices and stripping
    them afterwards.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.size == 0:
        raise ValueError("weight matrix must be a non-empty 2-D array")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    # Shift so costs are non-negative; the optimum is unchanged because every
    # feasible matching has the same number of pairs.
    cost = w.max() - w
    if w.shape[0] <= w.shape[1]:
        cols = _min_cost_rows(cost)
        return [(k, int(n)) for k, n in enumerate(cols)]
    rows = _min_cost_rows(cost.T)
    return sorted((int(k), n) for n, k in enumerate(rows))


def solve_matching(alpha: np.ndarray, rates: np.ndarray | None = None) -> AssignmentResult:
    """Assignment maximizing ``sum(1/alpha)`` over matched pairs."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 2 or alpha.size == 0:
        raise ValueError("alpha must be a non-empty K x N matrix")
    if np.any(~(alpha > 0)) or not np.all(np.isfinite(alpha)):
        raise ValueError("alpha entries must be positive and finite")
    throughput = 1.0 / alpha
    matching = max_weight_matching(throughput)
    return result_from_pairs(matching, alpha, rates)


def result_from_pairs(matching, alpha: np.ndarray, rates: np.ndarray | None = None) -> AssignmentResult:
    matching = sorted((int(k), int(n)) for k, n in matching)
    if not matching:
        return AssignmentResult.empty()
    ks = np.array([k for k, _ in matching])
    ns = np.array([n for _, n in matching])
    per_alpha = alpha[ks, ns]
    per_rate = rates[ks, ns] if rates is not None else np.full(len(ks), np.nan)
    return AssignmentResult(matching, per_rate, per_alpha, float(np.sum(1.0 / per_alpha)))


def assign_users(users, channels: ChannelRealization, bandwidth: float, noise_density: float) -> AssignmentResult:
    """Build the alpha matrix for one slot and solve the optimal assignment."""
    arrays = UserArrays.from_users(users)
    rates = rate_matrix(arrays, channels, bandwidth, noise_density)
    alpha = 1.0 / arrays.sensing_rate[:, None] + 1.0 / rates
    return solve_matching(alpha, rates)
