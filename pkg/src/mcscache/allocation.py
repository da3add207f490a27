"""Sensing-data-size allocation over the matched users.

Given per-bit times ``alpha_k`` the latency-optimal split finishes every
user at the same instant, ``z_k = V / (alpha_k * sum_j 1/alpha_j)``. Each
user is also bounded by its energy budget, ``z_k <= E_k / A_k`` with
``A_k = e_k + P_k / r_k`` joules per bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assignment import AssignmentResult
from .scenario import UserArrays

# Relative slack when comparing energies and demands in floating point.
REL_TOL = 1e-12


@dataclass
class AllocationResult:
    users: np.ndarray  # user ids, aligned with the arrays below
    z: np.ndarray  # bits
    alpha: np.ndarray = field(repr=False)  # s/bit
    rate: np.ndarray = field(repr=False)  # bit/s on the assigned subchannel
    sensing_rate: np.ndarray = field(repr=False)  # bit/s
    per_user_time: np.ndarray = field(repr=False)  # s
    per_user_energy: np.ndarray = field(repr=False)  # J
    system_latency: float = 0.0  # s
    feasible: bool = True
    shortfall: float = 0.0  # bits left unallocated

    @property
    def total_bits(self) -> float:
        return float(np.sum(self.z))


def energy_coefficient(sensing_energy_per_bit, transmit_power, rate):
    """Joules per bit for sensing plus uplink transmission."""
    return np.asarray(sensing_energy_per_bit) + np.asarray(transmit_power) / np.asarray(rate)


def energy_caps(assignment: AssignmentResult, users) -> np.ndarray:
    """Largest data size each matched user can handle within its budget."""
    arrays = UserArrays.from_users(users)
    ks = assignment.users
    coeff = energy_coefficient(arrays.sensing_energy_per_bit[ks], arrays.transmit_power[ks], assignment.per_user_rate)
    return arrays.energy_budget[ks] / coeff


def equal_time_split(alpha, demand: float) -> np.ndarray:
    inv = 1.0 / np.asarray(alpha, dtype=float)
    return demand * inv / inv.sum()


def _water_fill(alpha: np.ndarray, caps: np.ndarray, demand: float) -> tuple[np.ndarray, float]:
    """Min-max split with upper bounds; returns ``(z, shortfall)``.

    Raising the common finish time only ever adds users to the capped set,
    so every violator found in a pass stays capped at the optimum.
    """
    z = np.zeros_like(alpha)
    active = np.ones(len(alpha), dtype=bool)
    remaining = demand
    while active.any():
        trial = equal_time_split(alpha[active], remaining)
        over = trial > caps[active]
        if not over.any():
            z[active] = trial
            return z, 0.0
        idx = np.flatnonzero(active)[over]
        z[idx] = caps[idx]
        remaining -= caps[idx].sum()
        active[idx] = False
        if remaining <= demand * REL_TOL:
            return z, 0.0
    return z, max(remaining, 0.0)


def _finish(assignment, users, z, shortfall, demand) -> AllocationResult:
    arrays = UserArrays.from_users(users)
    ks = assignment.users
    alpha = assignment.per_user_alpha
    rate = assignment.per_user_rate
    times = alpha * z
    energy = arrays.sensing_energy_per_bit[ks] * z + arrays.transmit_power[ks] * z / rate
    return AllocationResult(
        users=ks,
        z=z,
        alpha=alpha,
        rate=rate,
        sensing_rate=arrays.sensing_rate[ks],
        per_user_time=times,
        per_user_energy=energy,
        system_latency=float(times.max()) if len(times) else 0.0,
        feasible=shortfall <= demand * 1e-9,
        shortfall=float(shortfall),
    )


def allocate(assignment: AssignmentResult, users, demand: float, mode: str = "fixpoint") -> AllocationResult:
    """Split ``demand`` bits over the matched users to minimize the slot latency.

    ``mode="fixpoint"`` freezes users at their energy cap and re-solves the
    equal-time split for the rest until nothing exceeds its cap.
    ``mode="strict"`` takes ``min(cap, equal-time share)`` per user, which
    can leave part of the demand unallocated when a cap binds.
    """
    if len(assignment) == 0:
        empty = np.zeros(0)
        return AllocationResult(np.zeros(0, dtype=int), empty, empty, empty, empty, empty, empty,
                                0.0, demand <= 0, float(max(demand, 0.0)))
    if demand <= 0:
        return _finish(assignment, users, np.zeros(len(assignment)), 0.0, 0.0)
    alpha = assignment.per_user_alpha
    caps = energy_caps(assignment, users)
    if mode == "fixpoint":
        z, shortfall = _water_fill(alpha, caps, demand)
    elif mode == "strict":
        z = np.minimum(caps, equal_time_split(alpha, demand))
        shortfall = max(demand - z.sum(), 0.0)
    else:
        raise ValueError(f"unknown allocation mode {mode!r}")
    return _finish(assignment, users, z, shortfall, demand)


def allocate_fixed(assignment: AssignmentResult, users, z, demand: float) -> AllocationResult:
    """Evaluate a prescribed split, clipping each user to its energy cap."""
    caps = energy_caps(assignment, users)
    clipped = np.minimum(np.asarray(z, dtype=float), caps)
    shortfall = max(demand - clipped.sum(), 0.0)
    return _finish(assignment, users, clipped, shortfall, demand)


def system_latency(allocation: AllocationResult) -> float:
    """Slot latency: the slowest user's sensing plus transmission time."""
    if len(allocation.z) == 0:
        return 0.0
    return float(np.max(allocation.z / allocation.sensing_rate + allocation.z / allocation.rate))


def energy_check(allocation: AllocationResult, users) -> np.ndarray:
    """Per matched user: does sensing plus transmission energy fit the budget?"""
    arrays = UserArrays.from_users(users)
    ks = allocation.users
    used = (arrays.sensing_energy_per_bit[ks] * allocation.z
            + arrays.transmit_power[ks] * allocation.z / allocation.rate)
    return used <= arrays.energy_budget[ks] * (1.0 + REL_TOL)
