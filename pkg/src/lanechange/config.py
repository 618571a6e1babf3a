"""Flat ``key = value`` configuration files.

Unspecified keys keep their defaults. Speeds may be given in km/h
(``*_kmh``) or m/s (``*_ms``); they are stored in m/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

from .dynamics import LateralLimits, RewardWeights, TerminalTolerance
from .gap import SafetyParams
from .idm import IdmParams
from .road import RoadGeometry
from .training import Environment, TrainConfig
from .world import KMH, ScenarioConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    env: Environment = Environment()
    train: TrainConfig = TrainConfig()

    @property
    def scenario(self) -> ScenarioConfig:
        return self.env.scenario

    def with_seed(self, seed: int) -> "Config":
        return Config(replace(self.env, scenario=replace(self.env.scenario, seed=seed)),
                      replace(self.train, seed=seed))


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _nonpos(x):
    return x <= 0


def _any(x):
    return math.isfinite(x)


def _unit_open(x):
    return 0 < x < 1


# key -> (type, range check, (section, field) or special handler)
KEYS = {
    "n_lanes": (int, lambda n: n >= 2, ("road", "n_lanes")),
    "segment_length": (float, _pos, ("road", "segment_length")),
    "lane_width": (float, _pos, ("road", "lane_width")),
    "curvature": (float, _any, ("road", "curvature")),
    "departure_interval_min": (float, _pos, ("scenario", "departure_interval", 0)),
    "departure_interval_max": (float, _pos, ("scenario", "departure_interval", 1)),
    "speed_limit_min_kmh": (float, _pos, ("scenario", "v_limit_range", 0, KMH)),
    "speed_limit_max_kmh": (float, _pos, ("scenario", "v_limit_range", 1, KMH)),
    "speed_limit_min_ms": (float, _pos, ("scenario", "v_limit_range", 0)),
    "speed_limit_max_ms": (float, _pos, ("scenario", "v_limit_range", 1)),
    "dt": (float, _pos, ("scenario", "dt")),
    "seed": (int, lambda n: 0 <= n < 2 ** 64, ("scenario", "seed")),
    "command_x_min": (float, _nonneg, ("scenario", "command_x_range", 0)),
    "command_x_max": (float, _nonneg, ("scenario", "command_x_range", 1)),
    "max_sim_steps": (int, _pos, ("scenario", "max_sim_steps")),
    "vehicle_length": (float, _pos, ("scenario", "vehicle_length")),
    "entrance_clear": (float, _nonneg, ("scenario", "entrance_clear")),
    "timeout_steps": (int, _pos, ("scenario", "timeout_steps")),
    "idm_a_max": (float, _pos, ("idm", "a_max")),
    "idm_b_comf": (float, _pos, ("idm", "b_comf")),
    "idm_s0": (float, _pos, ("idm", "s0")),
    "idm_T": (float, _pos, ("idm", "T")),
    "idm_delta": (float, lambda d: d >= 1, ("idm", "delta")),
    "idm_k_free": (float, _pos, ("idm", "k_free")),
    "idm_decel_floor": (float, _pos, ("idm", "decel_floor")),
    "d_min": (float, _pos, ("safety", "d_min")),
    "b_max": (float, _pos, ("safety", "b_max")),
    "w_acce": (float, _nonpos, ("weights", "w_acce")),
    "w_rate": (float, _nonpos, ("weights", "w_rate")),
    "w_time": (float, _nonpos, ("weights", "w_time")),
    "a_yaw_limit": (float, _pos, ("limits", "a_yaw")),
    "omega_limit": (float, _pos, ("limits", "omega")),
    "theta_limit": (float, lambda t: 0 < t < math.pi / 2, ("limits", "theta")),
    "terminal_dy": (float, _pos, ("tolerance", "dy")),
    "terminal_theta": (float, _pos, ("tolerance", "theta")),
    "terminal_omega": (float, _pos, ("tolerance", "omega")),
    "total_gradient_steps": (int, _pos, ("train", "total_gradient_steps")),
    "gamma": (float, _unit_open, ("train", "gamma")),
    "alpha": (float, _pos, ("train", "alpha")),
    "batch_size": (int, _pos, ("train", "batch_size")),
    "warmup_transitions": (int, _nonneg, ("train", "warmup_transitions")),
    "target_sync_period": (int, _pos, ("train", "target_sync_period")),
    "sigma_start": (float, _nonneg, ("train", "sigma_start")),
    "sigma_end": (float, _nonneg, ("train", "sigma_end")),
    "sigma_anneal_steps": (int, _pos, ("train", "sigma_anneal_steps")),
    "buffer_capacity": (int, _pos, ("train", "buffer_capacity")),
    "max_grad_norm": (float, _pos, ("train", "max_grad_norm")),
    "b_form": (str, lambda s: s in ("clamp", "max"), ("train", "b_form")),
    "hidden_ac": (int, _pos, ("train", "hidden_ac")),
    "hidden_b": (int, _pos, ("train", "hidden_b")),
}

# keys written by dump_config (m/s variants only, so a dump reloads bit-exactly)
DUMP_KEYS = [k for k in KEYS if not k.endswith("_kmh")]


def _defaults():
    env, train = Environment(), TrainConfig()
    return {
        "road": vars_of(env.road), "scenario": vars_of(env.scenario), "idm": vars_of(env.idm),
        "safety": vars_of(env.safety), "weights": vars_of(env.weights), "limits": vars_of(env.limits),
        "tolerance": vars_of(env.tolerance), "train": vars_of(train),
    }


def vars_of(obj):
    from dataclasses import fields
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def parse_config(text: str, source: str = "<config>") -> Config:
    sections = _defaults()
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        kind, check, target = KEYS[key]
        try:
            parsed = kind(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: cannot parse {value!r} as {kind.__name__} for {key}") from None
        if kind is float and not math.isfinite(parsed):
            raise ConfigError(f"{source}:{lineno}: {key} must be finite")
        if not check(parsed):
            raise ConfigError(f"{source}:{lineno}: {key} out of range ({value})")
        section, field_name = target[0], target[1]
        if len(target) >= 3:
            pair = list(sections[section][field_name])
            factor = target[3] if len(target) == 4 else 1.0
            pair[target[2]] = parsed * factor
            sections[section][field_name] = tuple(pair)
        else:
            sections[section][field_name] = parsed
        seen[key] = lineno
    try:
        env = Environment(
            road=RoadGeometry(**sections["road"]),
            scenario=ScenarioConfig(**sections["scenario"]),
            idm=IdmParams(**sections["idm"]),
            safety=SafetyParams(**sections["safety"]),
            weights=RewardWeights(**sections["weights"]),
            limits=LateralLimits(**sections["limits"]),
            tolerance=TerminalTolerance(**sections["tolerance"]),
        )
        train = TrainConfig(**{**sections["train"], "seed": sections["scenario"]["seed"]})
    except ValueError as exc:
        lines = ", ".join(f"{k} (line {n})" for k, n in seen.items())
        raise ConfigError(f"{source}: inconsistent settings: {exc}" + (f"; set keys: {lines}" if lines else "")) from None
    return Config(env, train)


def load_config(path=None) -> Config:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return Config()
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def _lookup(config: Config, key: str):
    target = KEYS[key][2]
    section = {"train": config.train, "road": config.env.road, "scenario": config.env.scenario,
               "idm": config.env.idm, "safety": config.env.safety, "weights": config.env.weights,
               "limits": config.env.limits, "tolerance": config.env.tolerance}[target[0]]
    value = getattr(section, target[1])
    if len(target) >= 3:
        value = value[target[2]]
    return value


def dump_config(config: Config) -> str:
    """Effective configuration as text; ``parse_config(dump_config(c)) == c``."""
    out = []
    for key in DUMP_KEYS:
        value = _lookup(config, key)
        out.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(out) + "\n"
