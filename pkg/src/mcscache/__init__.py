"""Cache-enabled mobile crowdsensing simulator.

Each slot the base station either reuses a cached task result or re-senses
the task. Re-sensing runs a user/subchannel assignment and a data split
chosen to minimize latency. The long-run objective weighs sensing latency
against the age of reused results.
"""

from .allocation import AllocationResult, allocate, energy_check, system_latency
from .assignment import AssignmentResult, build_alpha, max_weight_matching, solve_matching
from .baselines import POLICIES, PolicySpec, get_policy
from .cache import CacheState, PosteriorScore
from .channel import ChannelRealization, draw_channels, subchannel_rate
from .harness import SweepResult, SweepSpec, emit_csv, run_sweep
from .policy import RunMetrics, SlotDecision, decide_sensing, run_horizon, run_paired, run_slot
from .scenario import (
    ConfigError,
    ScenarioConfig,
    TaskType,
    UserProfile,
    generate_scenario,
    load_config,
    task_frequency,
)

__all__ = [
    "AllocationResult", "AssignmentResult", "CacheState", "ChannelRealization", "ConfigError",
    "POLICIES", "PolicySpec", "PosteriorScore", "RunMetrics", "ScenarioConfig", "SlotDecision",
    "SweepResult", "SweepSpec", "TaskType", "UserProfile", "allocate", "build_alpha", "decide_sensing",
    "draw_channels", "emit_csv", "energy_check", "generate_scenario", "get_policy", "load_config",
    "max_weight_matching", "run_horizon", "run_paired", "run_slot", "run_sweep", "solve_matching",
    "subchannel_rate", "system_latency", "task_frequency",
]
