"""Soft continuum arm model.

Three bellows joints, each bending with two rotational degrees of freedom and
modeled as a circular arc of fixed length (constant curvature), connected by
rigid links. The module provides:

* forward kinematics of a single arc segment and of the full chain,
* recovery of joint bends from segment end-point orientations,
* an adaptive joint controller that homes each joint axis to a reference bend
  and then freezes its gain,
* reduction of the homed chain's passive compliance to an equivalent planar
  spring at the end effector, which is what the co-manipulation simulation
  couples to.

Frames: each joint's local z axis points along the arm; a bend ``u`` about the
local x axis tips the segment toward -y, a bend ``v`` about the local y axis
tips it toward +x. Rigid links translate along the local z axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .model import ParameterError, Vec2

_SERIES_THETA = 1e-6

DEFAULT_REFERENCE_BEND = math.pi / 6.0  # 30 degrees


class ConfigurationError(ValueError):
    """Raised for bends or orientations outside the constant-curvature domain."""


class ReductionError(ValueError):
    """Raised when the endpoint-compliance reduction hits a singular chain."""


class JointBend(NamedTuple):
    """Bend components about the joint-local x and y axes, in radians."""

    u: float
    v: float

    @property
    def theta(self) -> float:
        return math.sqrt(self.u * self.u + self.v * self.v)


class Transform(NamedTuple):
    """Rigid transform: 3x3 rotation matrix and 3-vector translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def compose(self, other: "Transform") -> "Transform":
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class ArmConfig:
    joint_arc_lengths: tuple = (0.25, 0.25, 0.25)   # m
    rigid_link_lengths: tuple = (0.20, 0.20, 0.20)  # m
    joint_stiffness: float = 35.0                   # N*m/rad, per joint axis
    joint_damping: float = 20.0                     # N*m*s/rad, per joint axis
    reference_bend: float = DEFAULT_REFERENCE_BEND  # rad
    mount_offset: Vec2 = Vec2(0.0, 0.0)             # m, arm base in the vehicle frame

    def __post_init__(self):
        if len(self.joint_arc_lengths) != 3 or len(self.rigid_link_lengths) != 3:
            raise ParameterError("arm has exactly three joints and three links")
        if any(l <= 0.0 for l in self.joint_arc_lengths):
            raise ParameterError("joint arc lengths must be positive")
        if any(l <= 0.0 for l in self.rigid_link_lengths):
            raise ParameterError("rigid link lengths must be positive")
        if self.joint_stiffness <= 0.0:
            raise ParameterError("joint stiffness must be positive")
        if self.joint_damping < 0.0:
            raise ParameterError("joint damping must be >= 0")

    def homed_bends(self) -> list:
        """All joints bent by the reference angle in the sagittal (x-z) plane."""
        return [JointBend(0.0, self.reference_bend) for _ in range(3)]


def arc_coefficients(theta: float) -> tuple:
    """Return ``((1 - cos t)/t^2, sin(t)/t)`` with a series branch near zero.

    The closed form uses the half-angle identity so it stays fully accurate
    down to the series switch-over.
    """
    if abs(theta) < _SERIES_THETA:
        t2 = theta * theta
        return 0.5 - t2 / 24.0, 1.0 - t2 / 6.0
    s = math.sin(0.5 * theta)
    return 2.0 * s * s / (theta * theta), math.sin(theta) / theta


def fk_segment(bend: JointBend, arc_length: float) -> Transform:
    """Rigid transform across one constant-curvature segment.

    The tip orientation is the rotation by ``theta`` about the in-plane axis
    ``(u, v, 0)``; the tip position is the integral of the tangent along the
    arc, which collapses to a straight segment of length ``arc_length`` as the
    bend vanishes.
    """
    theta = bend.theta
    if theta >= math.pi:
        raise ConfigurationError(f"total bend {theta:.4f} rad exceeds the valid range [0, pi)")
    f, g = arc_coefficients(theta)
    p = np.array(
        [
            arc_length * bend.v * f,
            -arc_length * bend.u * f,
            arc_length * g,
        ]
    )
    rot = Rotation.from_rotvec([bend.u, bend.v, 0.0]).as_matrix()
    return Transform(rot, p)


def _link_transform(length: float) -> Transform:
    return Transform(np.eye(3), np.array([0.0, 0.0, length]))


def fk_chain(bends: Sequence[JointBend], config: ArmConfig) -> Transform:
    """End-effector transform of the full arm: arc, link, arc, link, arc, link."""
    if len(bends) != 3:
        raise ConfigurationError(f"expected 3 joint bends, got {len(bends)}")
    t = Transform.identity()
    for bend, arc, link in zip(bends, config.joint_arc_lengths, config.rigid_link_lengths):
        t = t.compose(fk_segment(bend, arc))
        t = t.compose(_link_transform(link))
    return t


def segment_orientations(bends: Sequence[JointBend]) -> list:
    """Absolute orientation at the end of each joint (links do not rotate)."""
    out = []
    r = np.eye(3)
    for bend in bends:
        r = r @ Rotation.from_rotvec([bend.u, bend.v, 0.0]).as_matrix()
        out.append(r.copy())
    return out


def estimate_bends_from_orientations(
    orientations: Sequence[np.ndarray], config: ArmConfig
) -> list:
    """Recover joint bends from the absolute end-point orientation of each joint.

    Under constant curvature the relative rotation across a joint is exactly
    the rotation about ``(u, v, 0)`` by the bend angle, so the log map of each
    relative rotation yields the bend components directly. The decomposition
    is unique for bend angles below pi.
    """
    if len(orientations) != 3:
        raise ConfigurationError(f"expected 3 orientations, got {len(orientations)}")
    bends = []
    prev = np.eye(3)
    for q in orientations:
        rel = prev.T @ np.asarray(q, dtype=float)
        rotvec = Rotation.from_matrix(rel).as_rotvec()
        angle = float(np.linalg.norm(rotvec))
        if angle >= math.pi - 1e-12:
            raise ConfigurationError(
                f"relative rotation of {angle:.4f} rad is ambiguous under constant curvature"
            )
        bends.append(JointBend(float(rotvec[0]), float(rotvec[1])))
        prev = np.asarray(q, dtype=float)
    return bends


# ---------------------------------------------------------------------------
# Adaptive joint homing


@dataclass
class MracState:
    """Per-axis adaptive controller state.

    The reference model is a critically damped second-order system. The
    adaptive gain is a torque term that grows by a gradient rule on the
    model-tracking error, soaking up whatever steady load the fixed feedback
    cannot cancel; once frozen it stays exactly constant.
    """

    adaptive_gain: float = 0.0
    model_angle: float = 0.0
    model_rate: float = 0.0
    frozen: bool = False


@dataclass(frozen=True)
class MracParams:
    natural_frequency: float = 2.0   # rad/s of the reference model
    feedback_gain: float = 20.0      # N*m/rad on the blended tracking error
    rate_weight: float = 0.2         # s, error-rate weighting in the blended error
    adaptation_rate: float = 100.0   # N*m per rad*s of blended error
    stiffness_feedforward: float = 35.0  # N*m/rad, holds the joint spring at reference


def mrac_step(
    measured: tuple,
    state: MracState,
    reference_bend: float,
    dt: float,
    params: MracParams = MracParams(),
) -> tuple:
    """Advance the homing controller one step.

    Returns ``(torque, new_state)``. The reference model moves toward
    ``reference_bend``; torque combines fixed feedback on the blended
    model-tracking error, the adaptive term, and a stiffness feedforward that
    holds the joint's own spring at the reference. Frozen states still advance
    the reference model but never the adaptive term.
    """
    if dt <= 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    angle, rate = measured
    wn = params.natural_frequency
    accel = wn * wn * (reference_bend - state.model_angle) - 2.0 * wn * state.model_rate
    model_rate = state.model_rate + accel * dt
    model_angle = state.model_angle + model_rate * dt

    blended = (model_angle - angle) + params.rate_weight * (model_rate - rate)
    gain = state.adaptive_gain
    if not state.frozen:
        gain = gain + params.adaptation_rate * blended * dt

    torque = params.feedback_gain * blended + gain + params.stiffness_feedforward * reference_bend
    return torque, MracState(gain, model_angle, model_rate, state.frozen)


def freeze_gain(state: MracState) -> MracState:
    """Lock the adaptive gain; idempotent."""
    return replace(state, frozen=True)


@dataclass
class JointPlant:
    """Rotational inertia-damping-spring model of one joint axis, for homing runs."""

    inertia: float = 0.1      # kg*m^2
    damping: float = 4.0      # N*m*s/rad
    stiffness: float = 35.0   # N*m/rad
    load_torque: float = 0.0  # N*m, constant disturbance (e.g. object weight)
    angle: float = 0.0
    rate: float = 0.0

    def step(self, torque: float, dt: float) -> None:
        accel = (torque - self.damping * self.rate - self.stiffness * self.angle - self.load_torque) / self.inertia
        self.rate += accel * dt
        self.angle += self.rate * dt


# ---------------------------------------------------------------------------
# Planar endpoint-spring reduction


@dataclass(frozen=True)
class EndpointSpring:
    """Equivalent planar spring-damper the homed arm presents at its tip."""

    stiffness: float           # N/m, isotropic
    damping: float             # N*s/m
    neutral_point: Vec2        # m, in the vehicle frame

    def __post_init__(self):
        if self.stiffness <= 0.0:
            raise ParameterError(f"stiffness must be positive, got {self.stiffness}")
        if self.damping < 0.0:
            raise ParameterError(f"damping must be >= 0, got {self.damping}")


def restoring_force(spring: EndpointSpring, p: Vec2, v: Vec2) -> Vec2:
    """Spring-damper force on the endpoint at position ``p`` moving at ``v``."""
    return Vec2(
        -spring.stiffness * (p.x - spring.neutral_point.x) - spring.damping * v.x,
        -spring.stiffness * (p.y - spring.neutral_point.y) - spring.damping * v.y,
    )


def _tip_position(config: ArmConfig, bends: Sequence[JointBend], j: int, delta: float) -> np.ndarray:
    joint, axis = divmod(j, 2)
    perturbed = list(bends)
    b = perturbed[joint]
    perturbed[joint] = JointBend(b.u + delta, b.v) if axis == 0 else JointBend(b.u, b.v + delta)
    return fk_chain(perturbed, config).translation


def _planar_jacobian(config: ArmConfig, bends: Sequence[JointBend], h: float = 1e-6) -> np.ndarray:
    """d(endpoint x, y)/d(joint bends), central finite differences, shape (2, 6)."""
    jac = np.zeros((2, 6))
    for j in range(6):
        plus = _tip_position(config, bends, j, h)
        minus = _tip_position(config, bends, j, -h)
        jac[0, j] = (plus[0] - minus[0]) / (2.0 * h)
        jac[1, j] = (plus[1] - minus[1]) / (2.0 * h)
    return jac


def home_offset(config: ArmConfig) -> Vec2:
    """Planar offset of the homed end effector from the vehicle origin."""
    tip = fk_chain(config.homed_bends(), config).translation
    return Vec2(config.mount_offset.x + float(tip[0]), config.mount_offset.y + float(tip[1]))


def endpoint_spring_from_config(config: ArmConfig, neutral_point: Vec2 | None = None) -> EndpointSpring:
    """Reduce the homed chain's joint stiffnesses to a planar endpoint spring.

    A virtual planar displacement of the tip maps to joint deflections through
    the kinematic sensitivity; the minimum-energy deflection gives the endpoint
    stiffness matrix as the inverse of ``J K^-1 J^T``. The isotropic value is
    the average of the two planar axes. Damping reduces through the same
    quadratic form with the joint damping coefficients.
    """
    bends = config.homed_bends()
    jac = _planar_jacobian(config, bends)
    if np.linalg.matrix_rank(jac, tol=1e-9) < 2:
        raise ReductionError("homed configuration has no planar endpoint sensitivity")

    def reduced(coeff: float) -> np.ndarray:
        compliance = jac @ jac.T / coeff
        return np.linalg.inv(compliance)

    k_mat = reduced(config.joint_stiffness)
    stiffness = float(k_mat[0, 0] + k_mat[1, 1]) / 2.0
    if config.joint_damping > 0.0:
        c_mat = reduced(config.joint_damping)
        damping = float(c_mat[0, 0] + c_mat[1, 1]) / 2.0
    else:
        damping = 0.0
    if neutral_point is None:
        neutral_point = home_offset(config)
    return EndpointSpring(stiffness=stiffness, damping=damping, neutral_point=neutral_point)
