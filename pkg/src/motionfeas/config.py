"""Scoring thresholds and their TOML-style config file.

Every threshold used by the scorers lives on :class:`Config`. A config file is
TOML; section names plus keys give the dotted names below, e.g.::

    [contact]
    height_max = 0.02

    [dynamics.torque_max]
    knee = 300.0

    [omega_max]
    left_knee = 6.28
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .skeleton import TORQUE_LIMITS

ENV_VAR = "MOTIONFEAS_CONFIG"


class ConfigError(ValueError):
    pass


# dotted key -> Config attribute
SCALAR_KEYS: dict[str, str] = {
    "contact.height_max": "contact_height_max",
    "contact.vel_max": "contact_vel_max",
    "float.rho_min": "rho_min",
    "float.rho_max": "rho_max",
    "float.eps": "rho_eps",
    "float.root_speed_min": "root_speed_min",
    "balance.clip": "balance_clip",
    "balance.no_contact_distance": "no_contact_distance",
    "slip_norm": "slip_norm",
    "gpen_norm": "gpen_norm",
    "ballistic.min_frames": "ballistic_min_frames",
    "ballistic.rms_max": "ballistic_rms_max",
    "spen.baseline": "spen_baseline",
    "spen.severe": "spen_severe",
    "dynamics.mass_kg": "mass_kg",
    "dynamics.gravity": "gravity",
    "dynamics.inertia": "inertia",
    "dynamics.met_norm": "met_norm",
    "dynamics.grf_vertical_factor": "grf_vertical_factor",
    "dynamics.grf_horizontal_factor": "grf_horizontal_factor",
    "reward.weight_kin": "weight_kin",
    "reward.weight_con": "weight_con",
    "reward.weight_dyn": "weight_dyn",
    "reward.advantage_clip": "advantage_clip",
    "reward.std_floor": "std_floor",
}

_INT_FIELDS = {"ballistic_min_frames"}
_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class Config:
    contact_height_max: float = 0.02
    contact_vel_max: float = 0.05
    rho_min: float = 0.6
    rho_max: float = 1.75
    rho_eps: float = 1e-3
    root_speed_min: float = 0.01
    balance_clip: float = 0.5
    no_contact_distance: float = 1.0
    slip_norm: float = 0.0025
    gpen_norm: float = 0.05
    ballistic_min_frames: int = 3
    ballistic_rms_max: float = 0.05
    spen_baseline: float = 2.0
    spen_severe: float = 20.0
    mass_kg: float = 70.0
    gravity: float = 9.81
    inertia: float = 1.0
    met_norm: float = 10000.0
    grf_vertical_factor: float = 3.0
    grf_horizontal_factor: float = 0.5
    weight_kin: float = 1.0
    weight_con: float = 1.0
    weight_dyn: float = 1.0
    advantage_clip: float = 5.0
    std_floor: float = 1e-8
    torque_max: dict[str, float] = field(default_factory=lambda: dict(TORQUE_LIMITS))
    omega_max: dict[str, float] = field(default_factory=dict)
    # joint name -> axis -> (lo, hi)
    joint_limits: dict[str, dict[str, tuple[float, float]]] = field(default_factory=dict)

    def replace(self, **changes: Any) -> Config:
        return dataclasses.replace(self, **changes)

    def with_overrides(self, flat: dict[str, Any]) -> Config:
        """Apply dotted-key overrides (``{"contact.height_max": 0.03}``)."""
        changes: dict[str, Any] = {}
        torque = dict(self.torque_max)
        omega = dict(self.omega_max)
        limits = {k: dict(v) for k, v in self.joint_limits.items()}
        for key, value in flat.items():
            if key in SCALAR_KEYS:
                attr = SCALAR_KEYS[key]
                changes[attr] = _coerce(key, value, int if attr in _INT_FIELDS else float)
                continue
            parts = key.split(".")
            if parts[:2] == ["dynamics", "torque_max"] and len(parts) == 3:
                torque[parts[2]] = _coerce(key, value, float)
            elif parts[0] == "omega_max" and len(parts) == 2:
                omega[parts[1]] = _coerce(key, value, float)
            elif parts[0] == "joint_limits" and len(parts) == 3 and parts[2] in _AXES:
                try:
                    lo, hi = (float(v) for v in value)
                except (TypeError, ValueError):
                    raise ConfigError(f"{key}: expected [min, max], got {value!r}") from None
                if not lo <= hi:
                    raise ConfigError(f"{key}: min {lo} exceeds max {hi}")
                limits.setdefault(parts[1], {})[parts[2]] = (lo, hi)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        cfg = dataclasses.replace(self, torque_max=torque, omega_max=omega,
                                  joint_limits=limits, **changes)
        cfg.check()
        return cfg

    def check(self) -> None:
        positive = ["contact_height_max", "contact_vel_max", "rho_eps", "balance_clip",
                    "slip_norm", "gpen_norm", "ballistic_rms_max", "mass_kg",
                    "gravity", "met_norm", "advantage_clip", "std_floor"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.rho_min < self.rho_max:
            raise ConfigError("float.rho_min must be below float.rho_max")
        if not self.spen_severe > self.spen_baseline:
            raise ConfigError("spen.severe must exceed spen.baseline")
        weights = (self.weight_kin, self.weight_con, self.weight_dyn)
        if min(weights) < 0 or sum(weights) <= 0:
            raise ConfigError("reward weights must be non-negative with a positive sum")
        if "default" not in self.torque_max:
            raise ConfigError("dynamics.torque_max.default is required")

    def as_flat_dict(self) -> dict[str, Any]:
        """Effective config as dotted keys, for echoing into reports."""
        out: dict[str, Any] = {key: getattr(self, attr) for key, attr in SCALAR_KEYS.items()}
        for cls, v in sorted(self.torque_max.items()):
            out[f"dynamics.torque_max.{cls}"] = v
        for joint, v in sorted(self.omega_max.items()):
            out[f"omega_max.{joint}"] = v
        for joint, axes in sorted(self.joint_limits.items()):
            for axis, rng in sorted(axes.items()):
                out[f"joint_limits.{joint}.{axis}"] = list(rng)
        return out


def _coerce(key: str, value: Any, kind: type) -> Any:
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if kind is int and out != float(value):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return out


def _flatten(table: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def parse_config(text: str, base: Config | None = None) -> Config:
    try:
        table = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    return (base or Config()).with_overrides(_flatten(table))


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Load a config file; falls back to ``$MOTIONFEAS_CONFIG`` then defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return Config()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def parse_override(item: str) -> tuple[str, Any]:
    """Parse a ``key=value`` CLI override; the value is read as a TOML value."""
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override must look like key=value, got {item!r}")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        raise ConfigError(f"bad override value in {item!r}") from None
    return key.strip(), value
