"""Scripted stand-ins for the human leader.

A policy produces a target position for the human-side handle as a function of
time; a grip spring converts target error into force on the handle. The
interactive session reuses the same grip coupling with live targets coming
from the browser instead of a policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ParameterError, Vec2

MIN_JERK = "min_jerk"
PROPORTIONAL = "proportional"
DECOMPOSED = "decomposed"  # straight x leg then straight y leg, min-jerk each

POLICIES = (MIN_JERK, PROPORTIONAL, DECOMPOSED)

# Nominal travel durations per task family, seeded from the human-soft-robot
# benchmark's mean completion times so scripted runs land in that regime.
DEFAULT_DURATION_STRAIGHT_X = 5.0
DEFAULT_DURATION_STRAIGHT_Y = 6.0
DEFAULT_DURATION_DIAGONAL = 7.0


@dataclass(frozen=True)
class LeaderParams:
    policy: str = MIN_JERK
    nominal_duration: float | None = None  # s; None selects the per-task default
    gain: float = 0.8                      # 1/s, proportional policy only
    max_speed: float = 1.5                 # m/s, target motion cap
    grip_stiffness: float = 400.0          # N/m
    grip_damping: float = 70.0             # N*s/m

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ParameterError(f"unknown leader policy {self.policy!r}")
        if self.nominal_duration is not None and self.nominal_duration <= 0.0:
            raise ParameterError("nominal_duration must be positive")
        if self.gain <= 0.0:
            raise ParameterError("gain must be positive")
        if self.max_speed <= 0.0:
            raise ParameterError("max_speed must be positive")
        if self.grip_stiffness <= 0.0:
            raise ParameterError("grip_stiffness must be positive")
        if self.grip_damping < 0.0:
            raise ParameterError("grip_damping must be >= 0")


def default_duration(displacement: Vec2) -> float:
    """Per-task nominal duration: straight x, straight y, or diagonal."""
    if displacement.x != 0.0 and displacement.y != 0.0:
        return DEFAULT_DURATION_DIAGONAL
    if displacement.x != 0.0:
        return DEFAULT_DURATION_STRAIGHT_X
    return DEFAULT_DURATION_STRAIGHT_Y


def _min_jerk_1d(t: float, duration: float) -> float:
    """Normalized quintic profile: 0 at t=0, 1 at t>=duration, zero end velocities."""
    if t <= 0.0:
        return 0.0
    if t >= duration:
        return 1.0
    s = t / duration
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def leader_target(t: float, start: Vec2, goal: Vec2, params: LeaderParams) -> Vec2:
    """Handle target position ``t`` seconds after the task started.

    The min-jerk duration is stretched when the quintic's peak speed
    (1.875 * distance / duration) would exceed ``max_speed``; the proportional
    gain is reduced when its initial rate would.
    """
    if t < 0.0:
        raise ParameterError(f"t must be >= 0, got {t}")
    dist = (goal - start).norm()
    duration = params.nominal_duration
    if duration is None:
        duration = default_duration(goal - start)
    if dist > 0.0:
        duration = max(duration, 1.875 * dist / params.max_speed)

    if params.policy == PROPORTIONAL:
        gain = params.gain
        if dist > 0.0:
            gain = min(gain, params.max_speed / dist)
        a = 1.0 - math.exp(-gain * t)
        return Vec2(start.x + (goal.x - start.x) * a, start.y + (goal.y - start.y) * a)

    if params.policy == DECOMPOSED:
        dx = goal.x - start.x
        dy = goal.y - start.y
        total = abs(dx) + abs(dy)
        if total == 0.0:
            return start
        tx_dur = duration * abs(dx) / total
        if t <= tx_dur or dy == 0.0:
            a = _min_jerk_1d(t, tx_dur) if tx_dur > 0.0 else 1.0
            return Vec2(start.x + dx * a, start.y)
        a = _min_jerk_1d(t - tx_dur, duration - tx_dur)
        return Vec2(start.x + dx, start.y + dy * a)

    a = _min_jerk_1d(t, duration)
    return Vec2(start.x + (goal.x - start.x) * a, start.y + (goal.y - start.y) * a)


def leader_force(handle_pos: Vec2, handle_vel: Vec2, target: Vec2, params: LeaderParams) -> Vec2:
    """Grip-spring force the leader applies to the handle."""
    return Vec2(
        params.grip_stiffness * (target.x - handle_pos.x) - params.grip_damping * handle_vel.x,
        params.grip_stiffness * (target.y - handle_pos.y) - params.grip_damping * handle_vel.y,
    )
