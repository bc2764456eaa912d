"""Scenario constants and the built-in parameter profiles.

Powers and noise are given in dBm and converted to watts once, when the
config is built. Everything downstream works in linear units.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np


class ConfigError(ValueError):
    """Raised for an invalid or inconsistent scenario configuration."""


def dbm_to_watt(x_dbm):
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All constants of one RIS-assisted two-way OFDM scenario.

    ``bits`` is the phase-shift resolution B; ``None`` means a continuous
    (infinite-resolution) codebook. ``P`` has shape (K, 2), ``sigma2`` has
    shape (K, V) and ``kappa`` shape (K,), all linear units.
    """

    K: int = 3
    V: int = 16
    R: int = 45
    bits: Optional[int] = None
    P: np.ndarray = field(default=None)
    sigma2: np.ndarray = field(default=None)
    kappa: np.ndarray = field(default=None)
    rho0: float = 1e-3
    d0: float = 1.0
    beta_kk: float = 3.5
    beta_kr: float = 2.2
    beta_rk: float = 2.2
    L_kk: int = 8
    L_kr: int = 4
    L_rk: int = 4
    alpha: float = 0.5
    ris_position: tuple = (0.0, 0.0, 10.0)
    cluster_centers: tuple = ((-35.0, 0.0, 5.0), (35.0, 0.0, 5.0))
    cluster_radius: float = 5.0
    tau: float = 0.5
    T_max: int = 100
    outer_tol: float = 1e-4
    outer_max_iters: int = 20
    lambda_grid_points: int = 101
    seed: int = 0

    def __post_init__(self):
        K, V = self.K, self.V
        P = dbm_to_watt(25.0) if self.P is None else self.P
        sigma2 = dbm_to_watt(-110.0) if self.sigma2 is None else self.sigma2
        kappa = 1.0 if self.kappa is None else self.kappa
        try:
            P = np.broadcast_to(np.asarray(P, dtype=float), (K, 2)).copy()
            sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (K, V)).copy()
            kappa = np.broadcast_to(np.asarray(kappa, dtype=float), (K,)).copy()
        except ValueError as exc:
            raise ConfigError(f"array field has the wrong shape: {exc}") from None
        for arr in (P, sigma2, kappa):
            arr.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "kappa", kappa)
        self.validate()

    def validate(self) -> None:
        if self.K < 1:
            raise ConfigError("K must be at least 1")
        if self.V < 2 * self.K:
            raise ConfigError(f"V={self.V} < 2K={2 * self.K}: every node-direction needs a sub-band")
        if self.R < 0:
            raise ConfigError("R must be non-negative")
        if self.bits is not None and self.bits < 1:
            raise ConfigError("bits must be >= 1 (use None for a continuous codebook)")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if min(self.L_kk, self.L_kr, self.L_rk) < 1:
            raise ConfigError("tap counts must be >= 1")
        if self.L_kr + self.L_rk - 1 > self.V or self.L_kk > self.V:
            raise ConfigError("channel delay spread exceeds the number of sub-bands")
        if np.any(self.P <= 0) or np.any(self.sigma2 <= 0) or np.any(self.kappa <= 0):
            raise ConfigError("powers, noise variances and weights must be strictly positive")
        if self.rho0 <= 0 or self.d0 <= 0:
            raise ConfigError("rho0 and d0 must be positive")
        if len(self.cluster_centers) != 2:
            raise ConfigError("exactly two cluster centers are required")
        if self.cluster_radius < 0:
            raise ConfigError("cluster_radius must be non-negative")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError("tau must lie in [0, 1]")
        if self.T_max < 0 or self.outer_max_iters < 1 or self.lambda_grid_points < 1:
            raise ConfigError("iteration counts must be positive")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @property
    def continuous(self) -> bool:
        return self.bits is None


# Keys accepted in config files / profiles that are given in log units.
_DB_KEYS = {"P_dbm": "P", "sigma2_dbm": "sigma2", "rho0_db": "rho0"}
_TUPLE_KEYS = {"ris_position", "cluster_centers"}


def from_mapping(values: Mapping[str, Any], base: Optional[SystemConfig] = None) -> SystemConfig:
    """Build a config from plain key/values, on top of ``base``.

    ``P_dbm``, ``sigma2_dbm`` and ``rho0_db`` are converted to linear units.
    ``bits`` accepts ``"inf"``/``null`` for the continuous codebook.
    """
    base = base or SystemConfig()
    known = {f.name for f in dataclasses.fields(SystemConfig)}
    changes: dict[str, Any] = {}
    for key, value in values.items():
        if key in _DB_KEYS:
            target = _DB_KEYS[key]
            conv = db_to_linear(value) * 1e-3 if key != "rho0_db" else db_to_linear(value)
            changes[target] = float(conv) if np.ndim(conv) == 0 else conv
        elif key == "bits":
            changes["bits"] = parse_bits(value)
        elif key in _TUPLE_KEYS:
            changes[key] = _to_tuple(value)
        elif key in known:
            changes[key] = value
        else:
            raise ConfigError(f"unknown config key: {key!r}")
    # Array fields are broadcast against K and V, so re-derive them from the
    # base only when the base values are scalars and dimensions change.
    for name in ("P", "sigma2", "kappa"):
        if name not in changes:
            arr = getattr(base, name)
            changes[name] = arr.flat[0] if np.all(arr == arr.flat[0]) else arr
    try:
        return dataclasses.replace(base, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _to_tuple(value):
    if isinstance(value, (list, tuple)):
        return tuple(_to_tuple(v) for v in value)
    return float(value)


def parse_bits(value) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "continuous", "none"):
            return None
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"bits must be an integer or 'inf', got {value!r}") from None
    if isinstance(value, float):
        if math.isinf(value):
            return None
        if not value.is_integer():
            raise ConfigError(f"bits must be an integer, got {value}")
        value = int(value)
    return int(value)


def load_config_file(path, base: Optional[SystemConfig] = None) -> SystemConfig:
    """Load a JSON or YAML key/value file into a config."""
    path = Path(path)
    text = path.read_text()
    suffix = path.suffix.lower()
    try:
        if suffix in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except Exception as exc:  # parse errors from either backend
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a key/value mapping")
    return from_mapping(data, base)


# Simulation settings used for the reported figures; R and bits are swept.
PROFILES: dict[str, dict[str, Any]] = {
    "paper": {
        "config": {},
        "R": [45],
        "bits": [None],
    },
    "paper-fig2a": {
        "config": {},
        "R": [15, 25, 35, 45],
        "bits": [None],
    },
    "paper-fig2b": {
        "config": {"R": 45},
        "R": [45],
        "bits": [1, 2, 3, 4, 5, None],
    },
    "tiny": {
        "config": {"K": 1, "V": 2, "R": 2, "bits": 1, "L_kk": 2, "L_kr": 1, "L_rk": 2},
        "R": [2],
        "bits": [1],
    },
}


def profile(name: str) -> tuple[SystemConfig, list[int], list[Optional[int]]]:
    """Return ``(config, default R sweep, default bits sweep)`` for a profile."""
    try:
        entry = PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
    cfg = from_mapping(entry["config"])
    return cfg, list(entry["R"]), list(entry["bits"])
