"""Scenario configuration and reproducible scenario generation.

A scenario is the static part of an experiment: the user population, the
task catalog and the sequence of published tasks. Channel gains are drawn
per slot elsewhere (see :mod:`mcscache.channel`).
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration. ``field`` names the offending setting."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


Range = tuple[float, float]

_ZIPF_RE = re.compile(r"^zipf\(\s*([0-9.eE+-]+)\s*\)$")

# Stream indices handed out by spawn(); fixed so that adding a consumer never
# shifts an existing one.
STREAM_SCENARIO = 0
STREAM_CHANNEL = 1
STREAM_POLICY = 2
STREAM_USER_REDRAW = 3


@dataclass(frozen=True)
class ScenarioConfig:
    num_users: int = 30
    num_subchannels: int = 20
    num_task_types: int = 20
    num_slots: int = 1000
    bandwidth: float = 1e6  # Hz per subchannel
    noise_density_dbm: float = -174.0  # dBm/Hz
    cache_capacity: float = 5e7  # bits
    aoi_max: float = 50.0
    weight_latency: float = 1.0
    weight_aoi: float = 0.1
    resense_frequency: float = 0.7
    distance_range: Range = (30.0, 500.0)  # m
    power_range: Range = (0.1, 0.2)  # W
    sensing_rate_range: Range = (1e4, 1e6)  # bit/s
    sensing_energy_range: Range = (1e-12, 1e-11)  # J/bit
    energy_budget_range: Range = (0.01, 0.1)  # J per slot
    task_size_range: Range = (0.5e7, 1.5e7)  # bits
    task_popularity: str = "zipf(0.8)"
    cache_hit_slot_duration: float = 0.05  # s
    rng_seed: int = 0
    # Draw P, o, e, E afresh every slot instead of once per scenario.
    per_slot_user_params: bool = False
    # "latency": slot lasts D-bar when sensing and the hit duration on reuse.
    # "fixed": every slot lasts fixed_slot_duration.
    slot_duration_mode: str = "latency"
    fixed_slot_duration: float = 1.0
    # "fixpoint" redistributes capped demand; "strict" is the pointwise min.
    allocation_mode: str = "fixpoint"

    def __post_init__(self):
        validate(self)

    @property
    def noise_density(self) -> float:
        """Noise power spectral density in W/Hz."""
        return 10.0 ** (self.noise_density_dbm / 10.0) * 1e-3

    @property
    def decision_threshold(self) -> float:
        """Reuse/re-sense threshold ``beta = beta0 * beta1 / beta2``."""
        return self.resense_frequency * self.weight_latency / self.weight_aoi

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


RANGE_FIELDS = (
    "distance_range",
    "power_range",
    "sensing_rate_range",
    "sensing_energy_range",
    "energy_budget_range",
    "task_size_range",
)


def parse_popularity(spec: str) -> tuple[str, float]:
    text = spec.strip().lower()
    if text == "uniform":
        return "uniform", 0.0
    m = _ZIPF_RE.match(text)
    if m:
        exponent = float(m.group(1))
        if exponent < 0 or not math.isfinite(exponent):
            raise ConfigError("task_popularity", f"bad zipf exponent {exponent}")
        return "zipf", exponent
    raise ConfigError("task_popularity", f"expected 'uniform' or 'zipf(s)', got {spec!r}")


def validate(config: ScenarioConfig) -> None:
    for name in ("num_users", "num_subchannels", "num_task_types", "num_slots"):
        value = getattr(config, name)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            raise ConfigError(name, f"must be an integer >= 1, got {value!r}")
    for name in (
        "bandwidth",
        "cache_capacity",
        "aoi_max",
        "weight_latency",
        "weight_aoi",
        "cache_hit_slot_duration",
        "fixed_slot_duration",
    ):
        value = getattr(config, name)
        if not (math.isfinite(value) and value > 0):
            raise ConfigError(name, f"must be finite and > 0, got {value!r}")
    if not math.isfinite(config.noise_density_dbm):
        raise ConfigError("noise_density_dbm", "must be finite")
    if not 0.0 <= config.resense_frequency <= 1.0:
        raise ConfigError("resense_frequency", f"must lie in [0, 1], got {config.resense_frequency!r}")
    for name in RANGE_FIELDS:
        value = getattr(config, name)
        try:
            lo, hi = value
        except (TypeError, ValueError):
            raise ConfigError(name, f"expected a (min, max) pair, got {value!r}") from None
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError(name, "bounds must be finite")
        if lo <= 0:
            raise ConfigError(name, f"minimum must be > 0, got {lo!r}")
        if lo > hi:
            raise ConfigError(name, f"minimum {lo!r} exceeds maximum {hi!r}")
    parse_popularity(config.task_popularity)
    if config.slot_duration_mode not in ("latency", "fixed"):
        raise ConfigError("slot_duration_mode", f"expected 'latency' or 'fixed', got {config.slot_duration_mode!r}")
    if config.allocation_mode not in ("fixpoint", "strict"):
        raise ConfigError("allocation_mode", f"expected 'fixpoint' or 'strict', got {config.allocation_mode!r}")


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    distance: float  # m
    transmit_power: float  # W
    sensing_rate: float  # bit/s
    sensing_energy_per_bit: float  # J/bit
    energy_budget: float  # J


@dataclass(frozen=True)
class TaskType:
    task_id: int  # 1..M
    size: float  # bits


class Scenario(NamedTuple):
    users: list[UserProfile]
    tasks: list[TaskType]
    task_schedule: list[int]


@dataclass
class UserArrays:
    """Column view of a user population, for vectorized per-slot work."""

    distance: np.ndarray
    transmit_power: np.ndarray
    sensing_rate: np.ndarray
    sensing_energy_per_bit: np.ndarray
    energy_budget: np.ndarray
    profiles: list[UserProfile] = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.distance)

    @classmethod
    def from_users(cls, users: Sequence[UserProfile]) -> "UserArrays":
        if isinstance(users, UserArrays):
            return users
        return cls(
            distance=np.array([u.distance for u in users], dtype=float),
            transmit_power=np.array([u.transmit_power for u in users], dtype=float),
            sensing_rate=np.array([u.sensing_rate for u in users], dtype=float),
            sensing_energy_per_bit=np.array([u.sensing_energy_per_bit for u in users], dtype=float),
            energy_budget=np.array([u.energy_budget for u in users], dtype=float),
            profiles=list(users),
        )


def root_sequence(seed: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(4)


def make_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(root_sequence(seed)[stream])


def _uniform(rng: np.random.Generator, bounds: Range, size: int) -> np.ndarray:
    lo, hi = bounds
    if lo == hi:
        return np.full(size, float(lo))
    return rng.uniform(lo, hi, size)


def draw_user_parameters(config: ScenarioConfig, rng: np.random.Generator, size: int):
    """Power, sensing rate, energy per bit and budget, in that order."""
    return (
        _uniform(rng, config.power_range, size),
        _uniform(rng, config.sensing_rate_range, size),
        _uniform(rng, config.sensing_energy_range, size),
        _uniform(rng, config.energy_budget_range, size),
    )


def popularity_weights(config: ScenarioConfig) -> np.ndarray:
    kind, exponent = parse_popularity(config.task_popularity)
    ranks = np.arange(1, config.num_task_types + 1, dtype=float)
    if kind == "uniform":
        w = np.ones_like(ranks)
    else:
        w = ranks ** -exponent
    return w / w.sum()


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Draw users, task sizes and the publication sequence for ``config``.

    Every draw comes from the scenario stream of ``config.rng_seed``, so the
    result is a pure function of the configuration.
    """
    validate(config)
    rng = make_rng(config.rng_seed, STREAM_SCENARIO)
    k = config.num_users
    distance = _uniform(rng, config.distance_range, k)
    power, rate, energy, budget = draw_user_parameters(config, rng, k)
    users = [
        UserProfile(i, float(distance[i]), float(power[i]), float(rate[i]), float(energy[i]), float(budget[i]))
        for i in range(k)
    ]
    sizes = _uniform(rng, config.task_size_range, config.num_task_types)
    tasks = [TaskType(i + 1, float(s)) for i, s in enumerate(sizes)]
    p = popularity_weights(config)
    schedule = rng.choice(config.num_task_types, size=config.num_slots, p=p) + 1
    return Scenario(users, tasks, [int(i) for i in schedule])


def task_frequency(task_schedule: Sequence[int], t: int) -> Counter:
    """Publication counts of every task over slots ``1..t`` (inclusive)."""
    if not 1 <= t <= len(task_schedule):
        raise ValueError(f"slot {t} outside 1..{len(task_schedule)}")
    return Counter(task_schedule[:t])


# -- flat key/value configuration files ------------------------------------

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def coerce_field(name: str, raw) -> object:
    """Convert a raw (string or already typed) value to the type of ``name``."""
    if name not in _FIELD_TYPES:
        raise ConfigError(name, "unknown setting")
    kind = _FIELD_TYPES[name]
    try:
        if name in RANGE_FIELDS:
            if isinstance(raw, str):
                parts = [p for p in re.split(r"[,\s]+", raw.strip().strip("[]()")) if p]
            else:
                parts = list(raw)
            if len(parts) == 1:
                parts = parts * 2
            if len(parts) != 2:
                raise ValueError("expected 'min, max'")
            return (float(parts[0]), float(parts[1]))
        if kind == "int":
            if isinstance(raw, str):
                value = float(raw)
                if value != int(value):
                    raise ValueError("not an integer")
                return int(value)
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return _parse_bool(raw) if isinstance(raw, str) else bool(raw)
        return str(raw).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, f"cannot parse {raw!r}: {exc}") from None


def read_key_values(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` file. A section header is optional."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[config]\n" + text
    parser.read_string(text)
    values: dict[str, str] = {}
    for section in parser.sections():
        values.update(parser[section])
    return values


def config_from_mapping(values: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    base = base or ScenarioConfig()
    changes = {name: coerce_field(name, raw) for name, raw in values.items()}
    return dataclasses.replace(base, **changes)


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    return config_from_mapping(read_key_values(path), base)


def dump_config(config: ScenarioConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in RANGE_FIELDS:
            value = f"{value[0]!r}, {value[1]!r}"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
