"""Shared planar primitives: vectors, poses, the carried object, global config."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple


class ParameterError(ValueError):
    """Raised when a physical parameter is outside its valid range."""


class Vec2(NamedTuple):
    """Planar vector. Units depend on context (m, m/s or N)."""

    x: float
    y: float

    def __add__(self, other):
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return Vec2(self.x - other.x, self.y - other.y)

    def scaled(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


ZERO2 = Vec2(0.0, 0.0)


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


class Pose2(NamedTuple):
    """Planar pose: position plus heading in radians, wrapped to (-pi, pi]."""

    position: Vec2
    heading: float

    @staticmethod
    def make(x: float, y: float, heading: float = 0.0) -> "Pose2":
        return Pose2(Vec2(x, y), normalize_angle(heading))

    def transform(self, p: Vec2) -> Vec2:
        """Map a point from this pose's local frame into the world frame."""
        c = math.cos(self.heading)
        s = math.sin(self.heading)
        return Vec2(
            self.position.x + c * p.x - s * p.y,
            self.position.y + s * p.x + c * p.y,
        )

    def compose(self, other: "Pose2") -> "Pose2":
        """Pose of ``other`` expressed through this pose (rigid-motion product)."""
        return Pose2(self.transform(other.position), normalize_angle(self.heading + other.heading))


def rect_yaw_inertia(mass: float, length: float, width: float) -> float:
    """Yaw inertia of a uniform rectangular plate, m(L^2 + W^2)/12."""
    if mass <= 0.0 or length <= 0.0 or width <= 0.0:
        raise ParameterError(
            f"mass, length and width must be positive, got ({mass}, {length}, {width})"
        )
    return mass * (length * length + width * width) / 12.0


# Object geometry and mass of the carried object used in the benchmark study.
CMO_LENGTH = 1.37
CMO_WIDTH = 0.55
CMO_MASS = 11.0


@dataclass
class CmoBody:
    """The co-manipulated rigid body: a stretcher-like plate carried at both ends.

    ``handle_offset`` locates the human grip, ``plate_offset`` the robot
    attachment, both in the body frame. They sit at opposite ends of the long
    axis by default.
    """

    length: float = CMO_LENGTH
    width: float = CMO_WIDTH
    mass: float = CMO_MASS
    handle_offset: Vec2 = Vec2(CMO_LENGTH / 2.0, 0.0)
    plate_offset: Vec2 = Vec2(-CMO_LENGTH / 2.0, 0.0)
    yaw_inertia: float = 0.0
    pose: Pose2 = Pose2(ZERO2, 0.0)
    velocity: Vec2 = ZERO2
    yaw_rate: float = 0.0

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ParameterError(f"mass must be positive, got {self.mass}")
        if self.yaw_inertia == 0.0:
            self.yaw_inertia = rect_yaw_inertia(self.mass, self.length, self.width)
        if self.yaw_inertia <= 0.0:
            raise ParameterError(f"yaw inertia must be positive, got {self.yaw_inertia}")
        if self.handle_offset.x * self.plate_offset.x >= 0.0:
            raise ParameterError("handle and plate must sit at opposite ends of the long axis")

    def attachment_world(self, which: str) -> Vec2:
        """World position of an attachment point: ``"handle"`` or ``"plate"``."""
        if which == "handle":
            return self.pose.transform(self.handle_offset)
        if which == "plate":
            return self.pose.transform(self.plate_offset)
        raise ValueError(f"unknown attachment {which!r}")


def attachment_world(body: CmoBody, which: str) -> Vec2:
    return body.attachment_world(which)


@dataclass
class SimConfig:
    """Global simulation settings shared by batch and interactive runs."""

    dt: float = 0.01
    translational_damping: float = 20.0  # N*s/m, viscous drag on the object
    rotational_damping: float = 8.0      # N*m*s, viscous drag on object yaw
    workspace_half_width: float = 1.0    # m, half-side of the square task region
    completion_tolerance: float = 0.05   # m
    completion_hold: float = 0.5         # s
    task_timeout: float = 60.0           # s
    pause_duration: float = 5.0          # s, rest between tasks in a set
    rng_seed: int = 0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.workspace_half_width <= 0.0:
            raise ParameterError(
                f"workspace_half_width must be positive, got {self.workspace_half_width}"
            )
        if self.completion_tolerance <= 0.0:
            raise ParameterError(
                f"completion_tolerance must be positive, got {self.completion_tolerance}"
            )
        if self.completion_hold < 0.0:
            raise ParameterError(f"completion_hold must be >= 0, got {self.completion_hold}")
        if not (0 <= int(self.rng_seed) < 2**64):
            raise ParameterError("rng_seed must fit in 64 bits")
