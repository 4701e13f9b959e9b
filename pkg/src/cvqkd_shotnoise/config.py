"""Run configuration files (TOML).

Physical quantities carry their unit in the key name::

    seed = 7

    [system]
    v_a_snu = 150.0
    t_channel = 1.0
    eta = 0.322
    eps_mod_snu = 0.3105
    v_el_snu = 0.01
    gain_mv2 = 783.16
    n_per_group = 100000

    [schedule]            # or: ratios = [...]
    k = 16
    step = 0.7
    top = 1.0

    [attack]              # optional
    type = "composite"
    [[attack.components]]
    type = "intercept_resend"
    mu = 1.0
    [[attack.components]]
    type = "saturation"
    alpha_snu_std = 4.0
    delta_snu_std = 4.0

    [thresholds]
    r2_min = 0.99
    residual_max_snu = 2e-4     # or: scale_residual_to_group_size = true

    [output]
    trace = "trace.csv"
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .attacks import (Composite, InterceptResend, Saturation, WavelengthInjection,
                      calibrate_wavelength_mask)
from .estimator import R2_MIN, RESIDUAL_MAX_SNU
from .params import SystemParams
from .scenarios import desk_thresholds
from .schedule import AttenuationSchedule, build_geometric_schedule

SYSTEM_KEYS = {
    "v_a_snu": "v_a",
    "t_channel": "t_channel",
    "eta": "eta",
    "eps_mod_snu": "eps_mod",
    "v_el_snu": "v_el",
    "n_per_group": "n_per_group",
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted key path."""

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"{field_path}: {message}")


@dataclass
class RunConfig:
    system: SystemParams
    schedule: AttenuationSchedule
    attack: object = None
    thresholds: dict = field(default_factory=lambda: {
        "r2_min": R2_MIN, "residual_max_snu": RESIDUAL_MAX_SNU, "atten_r2_min": R2_MIN})
    output: dict = field(default_factory=dict)
    source_hash: str = ""

    def with_seed(self, seed: int) -> "RunConfig":
        return RunConfig(self.system.with_(seed=seed), self.schedule, self.attack,
                         dict(self.thresholds), dict(self.output), self.source_hash)


def _expect_table(doc, key, required=False):
    value = doc.get(key)
    if value is None:
        if required:
            raise ConfigError(key, "missing section")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(key, "must be a table")
    return value


def _number(table, key, prefix, default=None):
    if key not in table:
        if default is None:
            raise ConfigError(f"{prefix}.{key}", "missing")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{prefix}.{key}", f"must be a number, got {v!r}")
    return v


def _check_unknown(table, allowed, prefix):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", "unknown key")


def parse_system(table: dict, seed) -> SystemParams:
    _check_unknown(table, set(SYSTEM_KEYS) | {"gain_mv2", "gain_v2"}, "system")
    kwargs = {attr: _number(table, key, "system", getattr(SystemParams, attr))
              for key, attr in SYSTEM_KEYS.items()}
    if "gain_mv2" in table and "gain_v2" in table:
        raise ConfigError("system.gain_mv2", "give gain_mv2 or gain_v2, not both")
    if "gain_mv2" in table:
        kwargs["gain_v2"] = _number(table, "gain_mv2", "system") * 1e-3
    elif "gain_v2" in table:
        kwargs["gain_v2"] = _number(table, "gain_v2", "system")
    if isinstance(kwargs["n_per_group"], float):
        if not kwargs["n_per_group"].is_integer():
            raise ConfigError("system.n_per_group", "must be an integer")
        kwargs["n_per_group"] = int(kwargs["n_per_group"])
    kwargs["seed"] = seed
    try:
        return SystemParams(**kwargs)
    except ValueError as exc:
        raise ConfigError("system", str(exc)) from None


def parse_schedule(table: dict) -> AttenuationSchedule:
    _check_unknown(table, {"k", "step", "top", "ratios", "weights", "bias"}, "schedule")
    try:
        if "ratios" in table:
            if any(key in table for key in ("k", "step", "top")):
                raise ConfigError("schedule.ratios", "give either ratios or k/step/top")
            base = AttenuationSchedule(tuple(table["ratios"]))
        else:
            base = build_geometric_schedule(int(_number(table, "k", "schedule", 16)),
                                            _number(table, "step", "schedule", 0.7),
                                            _number(table, "top", "schedule", 1.0))
        return AttenuationSchedule(base.ratios, table.get("weights"), table.get("bias"))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError("schedule", str(exc)) from None


def _parse_component(table: dict, prefix: str, system, schedule):
    kind = table.get("type")
    try:
        if kind == "intercept_resend":
            _check_unknown(table, {"type", "mu"}, prefix)
            return InterceptResend(_number(table, "mu", prefix, 1.0))
        if kind == "saturation":
            _check_unknown(table, {"type", "alpha_snu_std", "delta_snu_std"}, prefix)
            return Saturation(_number(table, "alpha_snu_std", prefix, 4.0),
                              _number(table, "delta_snu_std", prefix, 4.0))
        if kind == "wavelength":
            _check_unknown(table, {"type", "c0_snu", "c1_snu", "c2_snu", "calibrate", "mu"}, prefix)
            if table.get("calibrate", False):
                return calibrate_wavelength_mask(system, schedule, _number(table, "mu", prefix, 1.0))
            return WavelengthInjection(_number(table, "c0_snu", prefix, 0.0),
                                       _number(table, "c1_snu", prefix, 0.0),
                                       _number(table, "c2_snu", prefix, 0.0))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(prefix, str(exc)) from None
    raise ConfigError(f"{prefix}.type", f"unknown attack type {kind!r}")


def parse_attack(table: dict, system, schedule):
    if not table:
        return None
    if table.get("type") == "composite":
        _check_unknown(table, {"type", "components"}, "attack")
        comps = table.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError("attack.components", "composite attack needs a non-empty list")
        parts = tuple(_parse_component(c, f"attack.components[{i}]", system, schedule)
                      for i, c in enumerate(comps))
        try:
            return Composite(parts)
        except ValueError as exc:
            raise ConfigError("attack.components", str(exc)) from None
    return _parse_component(table, "attack", system, schedule)


def parse_thresholds(table: dict, n_per_group: int) -> dict:
    _check_unknown(table, {"r2_min", "residual_max_snu", "atten_r2_min",
                           "scale_residual_to_group_size"}, "thresholds")
    if table.get("scale_residual_to_group_size", False):
        if "residual_max_snu" in table:
            raise ConfigError("thresholds.residual_max_snu",
                              "conflicts with scale_residual_to_group_size")
        th = desk_thresholds(n_per_group)
    else:
        th = {"r2_min": R2_MIN, "residual_max_snu": RESIDUAL_MAX_SNU, "atten_r2_min": R2_MIN}
    for key in ("r2_min", "residual_max_snu", "atten_r2_min"):
        if key in table:
            th[key] = _number(table, key, "thresholds")
    for key in ("r2_min", "atten_r2_min"):
        if not 0 <= th[key] <= 1:
            raise ConfigError(f"thresholds.{key}", "must lie in [0, 1]")
    if th["residual_max_snu"] < 0:
        raise ConfigError("thresholds.residual_max_snu", "must be >= 0")
    return th


def parse_config(doc: dict, source_hash: str = "") -> RunConfig:
    _check_unknown(doc, {"seed", "system", "schedule", "attack", "thresholds", "output"}, "<root>")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {seed!r}")
    system = parse_system(_expect_table(doc, "system"), seed)
    schedule = parse_schedule(_expect_table(doc, "schedule"))
    attack = parse_attack(_expect_table(doc, "attack"), system, schedule)
    thresholds = parse_thresholds(_expect_table(doc, "thresholds"), system.n_per_group)
    output = _expect_table(doc, "output")
    return RunConfig(system, schedule, attack, thresholds, dict(output), source_hash)


def load_config(path) -> RunConfig:
    """Read and validate a run config; raises ConfigError or OSError."""
    raw = Path(path).read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"TOML syntax error: {exc}") from None
    return parse_config(doc, hashlib.sha256(raw).hexdigest())


def attack_to_dict(attack) -> dict | None:
    if attack is None:
        return None
    if isinstance(attack, Composite):
        return {"type": "composite", "components": [attack_to_dict(a) for a in attack.attacks]}
    if isinstance(attack, InterceptResend):
        return {"type": "intercept_resend", "mu": attack.mu}
    if isinstance(attack, Saturation):
        return {"type": "saturation", "alpha_snu_std": attack.alpha, "delta_snu_std": attack.delta}
    return {"type": "wavelength", "c0_snu": float(attack.c0), "c1_snu": float(attack.c1),
            "c2_snu": float(attack.c2)}
