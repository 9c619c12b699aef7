"""System parameters and the flat ``key = value`` config file format."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np


class ConfigError(ValueError):
    """Raised for invalid parameters or malformed config files."""


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of a D2D caching system.

    ``channel_alloc_probs`` of ``None`` means uniform 1/N, which is also the
    default weight vector.  ``user_power_db`` may be a scalar (shared by all
    users) or a length-N sequence.
    """

    n_users: int = 25
    n_files: int = 100
    cache_size: int = 30
    bandwidth_hz: float = 1.0
    noise_power: float = 1.0
    block_duration_s: float = 1.0
    file_size_bits: float = 11.3
    n_channels: int = 1
    bs_power_db: float = 23.0
    user_power_db: Union[float, Sequence[float]] = 20.0
    cell_radius_m: float = 1.0
    pathloss_exponent: float = 4.0
    zipf_beta: float = 0.1
    channel_alloc_probs: Optional[Sequence[float]] = None
    max_blocks_cap: int = 1_000_000

    def __post_init__(self):
        for name in ("n_users", "n_files", "n_channels", "max_blocks_cap"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.cache_size < 0 or self.cache_size > self.n_files:
            raise ConfigError("cache_size must satisfy 0 <= cache_size <= n_files")
        for name in ("bandwidth_hz", "noise_power", "block_duration_s",
                     "file_size_bits", "cell_radius_m", "pathloss_exponent"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.zipf_beta < 0:
            raise ConfigError("zipf_beta must be non-negative")
        if not np.isscalar(self.user_power_db):
            powers = tuple(float(p) for p in self.user_power_db)
            if len(powers) != self.n_users:
                raise ConfigError("user_power_db vector must have length n_users")
            object.__setattr__(self, "user_power_db", powers)
        if self.channel_alloc_probs is not None:
            probs = tuple(float(p) for p in self.channel_alloc_probs)
            if len(probs) != self.n_users:
                raise ConfigError("channel_alloc_probs must have length n_users")
            if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
                raise ConfigError("channel_alloc_probs must be a probability vector")
            object.__setattr__(self, "channel_alloc_probs", probs)

    @property
    def alloc_probs(self) -> np.ndarray:
        if self.channel_alloc_probs is None:
            return np.full(self.n_users, 1.0 / self.n_users)
        return np.array(self.channel_alloc_probs)

    @property
    def uniform_user_power(self) -> bool:
        return np.isscalar(self.user_power_db)

    def user_powers_linear(self) -> np.ndarray:
        if self.uniform_user_power:
            return np.full(self.n_users, float(db_to_linear(self.user_power_db)))
        return db_to_linear(self.user_power_db)

    @property
    def bs_power_linear(self) -> float:
        return float(db_to_linear(self.bs_power_db))

    def replace(self, **changes) -> "SystemConfig":
        # a stale per-user vector would fail validation after an N change
        if "n_users" in changes and changes["n_users"] != self.n_users:
            changes.setdefault("channel_alloc_probs", None)
            if not self.uniform_user_power:
                changes.setdefault("user_power_db", 20.0)
        return dataclasses.replace(self, **changes)


# Numerical setup of the reference experiments (M=100, F=11.3, 23/20 dB).
FULL_PROFILE = SystemConfig()

# Reduced instance sizes used for quick trend reproduction.
DESK_PROFILE = SystemConfig(n_users=10, n_files=30, cache_size=6)

PROFILES = {"full": FULL_PROFILE, "desk": DESK_PROFILE}


@dataclass
class ExperimentSpec:
    """One parameter sweep: a base config, an axis and what to run on it."""

    sweep_axis: str = "beta"
    axis_values: Sequence[float] = (0.0, 0.4, 0.8, 1.2)
    n_instances: int = 50
    algorithms: Sequence[str] = ("greedy", "naive")
    popularity_modes: Sequence[str] = ("identical", "independent")
    base: SystemConfig = field(default_factory=lambda: DESK_PROFILE)
    master_seed: int = 0
    n_mc_samples: int = 2000
    oracle_budget: int = 10_000_000

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {sorted(SWEEP_AXES)}")
        values = list(self.axis_values)
        if not values:
            raise ConfigError("axis_values must be non-empty")
        if values != sorted(values):
            raise ConfigError("axis_values must be sorted")
        if self.sweep_axis != "beta":
            values = [int(v) for v in values]
        self.axis_values = tuple(values)
        if self.n_instances < 1:
            raise ConfigError("n_instances must be >= 1")
        bad = set(self.algorithms) - {"greedy", "naive", "oracle"}
        if bad:
            raise ConfigError(f"unknown algorithms: {sorted(bad)}")
        bad = set(self.popularity_modes) - {"identical", "independent"}
        if bad:
            raise ConfigError(f"unknown popularity modes: {sorted(bad)}")
        self.algorithms = tuple(self.algorithms)
        self.popularity_modes = tuple(self.popularity_modes)

    def config_at(self, value) -> SystemConfig:
        return self.base.replace(**{SWEEP_AXES[self.sweep_axis]: value})


SWEEP_AXES = {"beta": "zipf_beta", "mu": "cache_size", "n_users": "n_users"}

_INT_KEYS = {"n_users", "n_files", "cache_size", "n_channels", "max_blocks_cap",
             "n_instances", "master_seed", "n_mc_samples", "oracle_budget",
             "seed", "xi"}
_LIST_KEYS = {"axis_values", "algorithms", "popularity_modes",
              "channel_alloc_probs"}
_STR_KEYS = {"sweep_axis", "profile", "mode"}
# keys read by individual commands rather than by a dataclass
_EXTRA_KEYS = {"profile", "seed", "xi", "mode"}


def parse_value(key, raw):
    raw = raw.strip()
    try:
        if key in _STR_KEYS:
            return raw
        if key in _LIST_KEYS:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if key in ("algorithms", "popularity_modes"):
                return tuple(items)
            return tuple(float(x) for x in items)
        if key == "user_power_db" and "," in raw:
            return tuple(float(x) for x in raw.split(","))
        if key in _INT_KEYS:
            return int(raw, 0)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        text = fh.read()
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return {k: parse_value(k, v) for k, v in parser["config"].items()}


def build_configs(values: dict):
    """Split a flat key/value mapping into (SystemConfig, remaining keys)."""
    values = dict(values)
    known = ({f.name for f in dataclasses.fields(SystemConfig)}
             | {f.name for f in dataclasses.fields(ExperimentSpec)} | _EXTRA_KEYS)
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = PROFILES.get(values.pop("profile", "full"))
    if base is None:
        raise ConfigError("profile must be one of " + ", ".join(PROFILES))
    sys_fields = {f.name for f in dataclasses.fields(SystemConfig)}
    sys_values = {k: values.pop(k) for k in list(values) if k in sys_fields}
    try:
        cfg = base.replace(**sys_values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, values


def build_experiment(values: dict) -> ExperimentSpec:
    cfg, rest = build_configs(values)
    spec_fields = {f.name for f in dataclasses.fields(ExperimentSpec)} - {"base"}
    unknown = set(rest) - spec_fields - {"seed", "xi", "mode"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in rest.items() if k in spec_fields}
    return ExperimentSpec(base=cfg, **kwargs)
