"""Displacement-based velocity controller.

The mobile base carries a compliant arm whose far end is dragged around by a
human through the shared object. The controller turns the arm-end displacement
(measured in the base frame, relative to a neutral point captured at start-up)
into a base velocity command: a deadband suppresses small fluctuations, the
remainder is scaled by a proportional gain and clamped by a velocity limiter.

The stock variant applies deadband and limiter element-wise per axis
(rectangular); the circular variant treats the planar displacement as one
vector, which removes the extra displacement a rectangular deadband demands
for diagonal motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ParameterError, Vec2

RECTANGULAR = "rectangular"
CIRCULAR = "circular"

REFERENCE_END_EFFECTOR = "end_effector"
REFERENCE_CMO_CENTER = "cmo_center"


@dataclass(frozen=True)
class ControllerParams:
    k_p: float = 1.0              # 1/s, displacement-to-velocity gain
    deadband: float = 0.1         # m
    v_max: float = 0.5            # m/s
    deadband_shape: str = RECTANGULAR
    reference_point: str = REFERENCE_CMO_CENTER

    def __post_init__(self):
        if self.k_p <= 0.0:
            raise ParameterError(f"k_p must be positive, got {self.k_p}")
        if self.deadband < 0.0:
            raise ParameterError(f"deadband must be >= 0, got {self.deadband}")
        if self.v_max <= 0.0:
            raise ParameterError(f"v_max must be positive, got {self.v_max}")
        if self.deadband_shape not in (RECTANGULAR, CIRCULAR):
            raise ParameterError(f"unknown deadband shape {self.deadband_shape!r}")
        if self.reference_point not in (REFERENCE_END_EFFECTOR, REFERENCE_CMO_CENTER):
            raise ParameterError(f"unknown reference point {self.reference_point!r}")


@dataclass(frozen=True)
class ControllerState:
    """Neutral reference position in the base frame, captured once at start."""

    p0: Vec2


def compute_displacement(p_t: Vec2, state: ControllerState) -> Vec2:
    """Displacement of the reference point from its neutral, in the base frame."""
    return Vec2(p_t.x - state.p0.x, p_t.y - state.p0.y)


def _deadband_scalar(d: float, db: float) -> float:
    if d > db:
        return d - db
    if d < -db:
        return d + db
    return 0.0


def apply_deadband_rect(dp: Vec2, deadband: float) -> Vec2:
    """Per-axis deadband: zero inside +-deadband, shifted linear outside."""
    return Vec2(_deadband_scalar(dp.x, deadband), _deadband_scalar(dp.y, deadband))


def apply_deadband_circular(dp: Vec2, deadband: float) -> Vec2:
    """Radial deadband: shrink the vector magnitude by ``deadband``, keep direction."""
    n = dp.norm()
    if n <= deadband:
        return Vec2(0.0, 0.0)
    s = (n - deadband) / n
    return Vec2(dp.x * s, dp.y * s)


def saturate(v: Vec2, v_max: float, shape: str = RECTANGULAR) -> Vec2:
    """Velocity limiter; per-axis clamp (rectangular) or norm clamp (circular)."""
    if shape == RECTANGULAR:
        return Vec2(
            max(-v_max, min(v_max, v.x)),
            max(-v_max, min(v_max, v.y)),
        )
    n = v.norm()
    if n <= v_max:
        return v
    s = v_max / n
    return Vec2(v.x * s, v.y * s)


def command_velocity(p_t: Vec2, state: ControllerState, params: ControllerParams) -> Vec2:
    """Full control law: deadband the displacement, scale by k_p, limit."""
    dp = compute_displacement(p_t, state)
    if params.deadband_shape == RECTANGULAR:
        u = apply_deadband_rect(dp, params.deadband)
    else:
        u = apply_deadband_circular(dp, params.deadband)
    raw = Vec2(params.k_p * u.x, params.k_p * u.y)
    return saturate(raw, params.v_max, params.deadband_shape)
