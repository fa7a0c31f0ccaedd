"""Omni-directional mobile base motion model.

The real platform's wheel-level control is abstracted to a first-order lag on
commanded velocity with an acceleration clamp and hard speed caps. An optional
castor model reproduces the start-stop signature of powered castors that halt
the platform while reorienting after large commanded-direction changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .model import ParameterError, Pose2, Vec2, normalize_angle

# Commands slower than this do not update the remembered travel direction.
DIRECTION_EPS = 1e-4


@dataclass(frozen=True)
class BaseParams:
    v_cap: float = 5.0                 # m/s, hard platform limit
    v_study: float = 0.5               # m/s, configured safety limit
    accel_limit: float = 2.0           # m/s^2
    tracking_time_constant: float = 0.15  # s, first-order command lag
    castor_enabled: bool = False
    castor_threshold: float = math.pi / 3.0  # rad of commanded-direction change
    castor_stall: float = 0.3          # s of halted motion while reorienting

    def __post_init__(self):
        if not (0.0 < self.v_study <= self.v_cap):
            raise ParameterError(f"need 0 < v_study <= v_cap, got {self.v_study}, {self.v_cap}")
        if self.accel_limit <= 0.0:
            raise ParameterError(f"accel_limit must be positive, got {self.accel_limit}")
        if self.tracking_time_constant <= 0.0:
            raise ParameterError(
                f"tracking_time_constant must be positive, got {self.tracking_time_constant}"
            )
        if self.castor_threshold < 0.0 or self.castor_stall < 0.0:
            raise ParameterError("castor threshold and stall must be >= 0")


@dataclass(frozen=True)
class BaseState:
    pose: Pose2 = Pose2(Vec2(0.0, 0.0), 0.0)
    velocity: Vec2 = Vec2(0.0, 0.0)
    last_command_direction: float = 0.0
    has_direction: bool = False
    stall_remaining: float = 0.0


def track_velocity(cmd: Vec2, state: BaseState, params: BaseParams, dt: float) -> BaseState:
    """Advance the base one step toward a commanded velocity.

    The command is clamped to the study speed limit, tracked through the lag
    and acceleration clamp, and capped at the platform limit; the pose then
    integrates the updated velocity. With castors enabled, a commanded
    direction change beyond the threshold zeroes the velocity for the stall
    duration before tracking resumes.
    """
    if dt <= 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if not (cmd.is_finite()):
        raise ParameterError(f"command must be finite, got {cmd}")

    tx, ty = cmd.x, cmd.y
    speed = math.sqrt(tx * tx + ty * ty)
    if speed > params.v_study:
        s = params.v_study / speed
        tx *= s
        ty *= s
        speed = params.v_study

    vx, vy = state.velocity.x, state.velocity.y
    stall = state.stall_remaining
    last_dir = state.last_command_direction
    has_dir = state.has_direction

    stalled = False
    if params.castor_enabled:
        if speed > DIRECTION_EPS:
            d = math.atan2(ty, tx)
            if has_dir and stall <= 0.0:
                delta = abs(normalize_angle(d - last_dir))
                if delta > params.castor_threshold:
                    stall = params.castor_stall
            last_dir = d
            has_dir = True
        if stall > 0.0:
            stalled = True
            stall -= dt
            if stall < 0.0:
                stall = 0.0
            vx = 0.0
            vy = 0.0

    if not stalled:
        alpha = 1.0 - math.exp(-dt / params.tracking_time_constant)
        ax = (tx - vx) * alpha
        ay = (ty - vy) * alpha
        astep = math.sqrt(ax * ax + ay * ay)
        amax = params.accel_limit * dt
        if astep > amax:
            s = amax / astep
            ax *= s
            ay *= s
        vx += ax
        vy += ay
        vnorm = math.sqrt(vx * vx + vy * vy)
        if vnorm > params.v_cap:
            s = params.v_cap / vnorm
            vx *= s
            vy *= s

    pose = Pose2(
        Vec2(state.pose.position.x + vx * dt, state.pose.position.y + vy * dt),
        state.pose.heading,
    )
    return BaseState(pose, Vec2(vx, vy), last_dir, has_dir, stall_remaining=stall)
