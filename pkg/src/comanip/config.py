"""Run configuration: versioned JSON with strict unknown-key rejection."""

from __future__ import annotations

import json
from pathlib import Path

from .arm import ArmConfig, EndpointSpring, home_offset
from .base import BaseParams
from .controller import ControllerParams
from .leader import LeaderParams
from .model import CmoBody, ParameterError, SimConfig, Vec2
from .sim import SCHEMA_VERSION, ParamBundle


class ConfigError(ValueError):
    """Raised for malformed or invalid run configuration."""


def _require_keys(obj: dict, allowed: set, path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")


def _vec2(value, path: str) -> Vec2:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{path}: expected a [x, y] pair, got {value!r}")
    return Vec2(float(value[0]), float(value[1]))


def _section(data: dict, name: str) -> dict:
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected an object, got {type(sec).__name__}")
    return sec


def bundle_from_dict(data: dict) -> ParamBundle:
    if not isinstance(data, dict):
        raise ConfigError(f"top level: expected an object, got {type(data).__name__}")
    _require_keys(data, {"schema_version", "controller", "base", "arm", "leader",
                         "sim", "cmo", "endpoint_spring"}, "top level")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")

    try:
        c = _section(data, "controller")
        _require_keys(c, {"k_p", "deadband", "v_max", "deadband_shape", "reference_point"},
                      "controller")
        controller = ControllerParams(**c)

        b = _section(data, "base")
        _require_keys(b, {"v_cap", "v_study", "accel_limit", "tracking_time_constant",
                          "castor_enabled", "castor_threshold", "castor_stall"}, "base")
        base = BaseParams(**b)

        a = _section(data, "arm")
        _require_keys(a, {"joint_arc_lengths", "rigid_link_lengths", "joint_stiffness",
                          "joint_damping", "reference_bend", "mount_offset"}, "arm")
        a = dict(a)
        if "joint_arc_lengths" in a:
            a["joint_arc_lengths"] = tuple(a["joint_arc_lengths"])
        if "rigid_link_lengths" in a:
            a["rigid_link_lengths"] = tuple(a["rigid_link_lengths"])
        if "mount_offset" in a:
            a["mount_offset"] = _vec2(a["mount_offset"], "arm.mount_offset")
        arm = ArmConfig(**a)

        l = _section(data, "leader")
        _require_keys(l, {"policy", "nominal_duration", "gain", "max_speed",
                          "grip_stiffness", "grip_damping"}, "leader")
        leader = LeaderParams(**l)

        s = _section(data, "sim")
        _require_keys(s, {"dt", "translational_damping", "rotational_damping",
                          "workspace_half_width", "completion_tolerance", "completion_hold",
                          "task_timeout", "pause_duration", "rng_seed"}, "sim")
        sim_cfg = SimConfig(**s)

        m = _section(data, "cmo")
        _require_keys(m, {"length", "width", "mass", "handle_offset", "plate_offset"}, "cmo")
        m = dict(m)
        if "handle_offset" in m:
            m["handle_offset"] = _vec2(m["handle_offset"], "cmo.handle_offset")
        if "plate_offset" in m:
            m["plate_offset"] = _vec2(m["plate_offset"], "cmo.plate_offset")
        cmo = CmoBody(**m)

        spring = None
        if "endpoint_spring" in data:
            sp = _section(data, "endpoint_spring")
            _require_keys(sp, {"stiffness", "damping"}, "endpoint_spring")
            if sp:
                if "stiffness" not in sp:
                    raise ConfigError("endpoint_spring: stiffness is required when overriding")
                neutral = home_offset(arm)
                spring = EndpointSpring(stiffness=float(sp["stiffness"]),
                                        damping=float(sp.get("damping", 0.0)),
                                        neutral_point=neutral)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

    return ParamBundle(controller=controller, base=base, arm=arm, leader=leader,
                       sim=sim_cfg, cmo=cmo, spring=spring)


def load_config(path) -> ParamBundle:
    """Parse and validate a JSON run config; errors carry line context."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return bundle_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
