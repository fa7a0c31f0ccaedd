"""Coupled fixed-step simulation of the leader-robot-object system.

Each step: the controller reads the reference-point displacement in the base
frame and commands a base velocity; the base tracks it; the object feels the
leader's grip force at the handle, the arm's endpoint spring at the plate
(neutral rigidly attached to the base frame), and viscous damping; planar
rigid-body dynamics integrate with semi-implicit Euler.

Orchestration mirrors the benchmark protocol: a task runs until the reference
point holds inside the completion tolerance for the hold duration (or times
out), a set runs all eight tasks with five-second pauses in between, a session
runs several distinct randomly drawn sets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _layout as L
from ._backend import kernel
from .arm import ArmConfig, EndpointSpring, endpoint_spring_from_config, home_offset
from .base import BaseParams
from .controller import (
    CIRCULAR,
    REFERENCE_CMO_CENTER,
    REFERENCE_END_EFFECTOR,
    ControllerParams,
    ControllerState,
)
from .leader import LeaderParams, leader_target
from .model import CmoBody, ParameterError, Pose2, SimConfig, Vec2
from .tasks import Task, TaskSet, enumerate_valid_sets, goal_sequence, sample_distinct_indices

SCHEMA_VERSION = 1


class SimulationFault(RuntimeError):
    """Raised when the state validator finds a non-finite value."""


@dataclass(frozen=True)
class ParamBundle:
    """Everything a run needs, resolved to concrete values."""

    controller: ControllerParams = ControllerParams()
    base: BaseParams = BaseParams()
    arm: ArmConfig = ArmConfig()
    leader: LeaderParams = LeaderParams()
    sim: SimConfig = SimConfig()
    cmo: CmoBody = field(default_factory=CmoBody)
    spring: EndpointSpring | None = None  # None derives it from the arm model

    def resolved_spring(self) -> EndpointSpring:
        if self.spring is not None:
            return self.spring
        return endpoint_spring_from_config(self.arm)


def _pack_params(bundle: ParamBundle, p0: Vec2, home: Vec2) -> np.ndarray:
    c = bundle.controller
    b = bundle.base
    s = bundle.sim
    spring = bundle.resolved_spring()
    P = np.zeros(L.PARAM_SIZE)
    P[L.P_DT] = s.dt
    P[L.P_KP] = c.k_p
    P[L.P_DEADBAND] = c.deadband
    P[L.P_VMAX] = c.v_max
    P[L.P_SHAPE] = 1.0 if c.deadband_shape == CIRCULAR else 0.0
    P[L.P_REFPOINT] = 1.0 if c.reference_point == REFERENCE_END_EFFECTOR else 0.0
    P[L.P_P0X] = p0.x
    P[L.P_P0Y] = p0.y
    P[L.P_MASS] = bundle.cmo.mass
    P[L.P_INERTIA] = bundle.cmo.yaw_inertia
    P[L.P_HANDLE_X] = bundle.cmo.handle_offset.x
    P[L.P_HANDLE_Y] = bundle.cmo.handle_offset.y
    P[L.P_PLATE_X] = bundle.cmo.plate_offset.x
    P[L.P_PLATE_Y] = bundle.cmo.plate_offset.y
    P[L.P_DAMP_TRANS] = s.translational_damping
    P[L.P_DAMP_ROT] = s.rotational_damping
    P[L.P_ARM_K] = spring.stiffness
    P[L.P_ARM_C] = spring.damping
    P[L.P_HOME_X] = home.x
    P[L.P_HOME_Y] = home.y
    P[L.P_GRIP_K] = bundle.leader.grip_stiffness
    P[L.P_GRIP_C] = bundle.leader.grip_damping
    P[L.P_V_STUDY] = b.v_study
    P[L.P_V_CAP] = b.v_cap
    P[L.P_ACCEL] = b.accel_limit
    P[L.P_ALPHA] = 1.0 - math.exp(-s.dt / b.tracking_time_constant)
    P[L.P_CASTOR_ON] = 1.0 if b.castor_enabled else 0.0
    P[L.P_CASTOR_THRESHOLD] = b.castor_threshold
    P[L.P_CASTOR_STALL] = b.castor_stall
    return P


class World:
    """Mutable simulation state plus its packed kernel arrays.

    The endpoint-spring neutral is rigidly attached to the base frame: the
    kernel re-derives it every step as base position plus the homed arm
    offset, so the attachment invariant holds by construction.
    """

    def __init__(self, bundle: ParamBundle, start: Vec2 = Vec2(0.0, 0.0),
                 validate_every_step: bool = False):
        self.bundle = bundle
        self.home = home_offset(bundle.arm)
        plate_world = start + bundle.cmo.plate_offset
        base0 = plate_world - self.home

        self.S = np.zeros(L.STATE_SIZE)
        self.S[L.S_CMO_X] = start.x
        self.S[L.S_CMO_Y] = start.y
        self.S[L.S_BASE_X] = base0.x
        self.S[L.S_BASE_Y] = base0.y

        if bundle.controller.reference_point == REFERENCE_CMO_CENTER:
            ref0 = start
        else:
            ref0 = plate_world
        p0 = ref0 - base0
        self.controller_state = ControllerState(p0=p0)
        self.P = _pack_params(bundle, p0, self.home)
        self.validate_every_step = validate_every_step

    # --- introspection ----------------------------------------------------
    @property
    def time(self) -> float:
        return float(self.S[L.S_TIME])

    @property
    def cmo_pose(self) -> Pose2:
        return Pose2(Vec2(float(self.S[L.S_CMO_X]), float(self.S[L.S_CMO_Y])),
                     float(self.S[L.S_CMO_YAW]))

    @property
    def base_position(self) -> Vec2:
        return Vec2(float(self.S[L.S_BASE_X]), float(self.S[L.S_BASE_Y]))

    @property
    def base_velocity(self) -> Vec2:
        return Vec2(float(self.S[L.S_BASE_VX]), float(self.S[L.S_BASE_VY]))

    @property
    def spring_neutral(self) -> Vec2:
        return Vec2(float(self.S[L.S_BASE_X]) + self.home.x,
                    float(self.S[L.S_BASE_Y]) + self.home.y)

    def reference_point(self) -> Vec2:
        rx, ry = kernel.reference_xy(self.S, self.P)
        return Vec2(float(rx), float(ry))

    def handle_position(self) -> Vec2:
        body = self.bundle.cmo
        return self.cmo_pose.transform(body.handle_offset)

    def validate(self) -> None:
        if not np.all(np.isfinite(self.S)):
            raise SimulationFault(f"non-finite state at t={self.S[L.S_TIME]}: {self.S!r}")

    # --- stepping -----------------------------------------------------------
    def step_forced(self, leader_force: Vec2) -> np.ndarray:
        """One step with an externally supplied leader force; returns the record row."""
        rec = np.zeros(L.RECORD_SIZE)
        kernel.step_forced(self.S, self.P, leader_force.x, leader_force.y, rec)
        if self.validate_every_step:
            self.validate()
        return rec

    def step_with_target(self, target: Vec2) -> np.ndarray:
        """One step with the grip spring pulling the handle toward ``target``."""
        rec = np.zeros(L.RECORD_SIZE)
        kernel.step_target(self.S, self.P, target.x, target.y, rec)
        if self.validate_every_step:
            self.validate()
        return rec


@dataclass
class TrialResult:
    task: Task
    start: Vec2
    goal: Vec2
    trace: np.ndarray  # rows follow the trace column layout
    completed: bool
    completion_time: float | None

    def trace_csv(self) -> str:
        lines = [L.TRACE_HEADER]
        for row in self.trace:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


@dataclass
class SetResult:
    library_index: int
    task_set: TaskSet
    trials: list


@dataclass
class SessionLog:
    seed: int
    n_sets: int
    workspace_half_width: float
    sets: list
    config: dict


def hold_rows(cfg: SimConfig) -> int:
    """Consecutive aligned trace rows required for completion."""
    return int(round(cfg.completion_hold / cfg.dt)) + 1


def _leader_targets(times: np.ndarray, start: Vec2, goal: Vec2, params: LeaderParams) -> np.ndarray:
    out = np.empty((len(times), 2))
    for i, t in enumerate(times):
        p = leader_target(float(t), start, goal, params)
        out[i, 0] = p.x
        out[i, 1] = p.y
    return out


def run_task(world: World, task: Task, goal: Vec2, target_start: Vec2) -> TrialResult:
    """Run one task to sustained alignment or timeout.

    ``goal`` is the reference-point goal. The leader steers the object center
    from ``target_start`` (the previous goal, so profiles chain on the task
    grid without drift) toward ``goal``; the grip reacts at the handle.
    """
    bundle = world.bundle
    cfg = bundle.sim
    dt = cfg.dt
    n_max = int(round(cfg.task_timeout / dt))
    needed = hold_rows(cfg)
    start_ref = world.reference_point()

    rel_times = np.arange(n_max) * dt
    targets = _leader_targets(rel_times, target_start, goal, bundle.leader)

    trace = np.zeros((n_max + 1, L.RECORD_SIZE))
    kernel.record_state(world.S, world.P, targets[0, 0], targets[0, 1], trace[0])
    t0 = trace[0, L.R_T]

    tol = cfg.completion_tolerance
    aligned0 = (start_ref.x - goal.x) ** 2 + (start_ref.y - goal.y) ** 2 <= tol * tol
    hold = 1 if aligned0 else 0
    if hold >= needed:
        return TrialResult(task, start_ref, goal, trace[:1].copy(), True, 0.0)

    steps, hold, completed_row = kernel.run_steps(
        world.S, world.P, targets, trace, 1, goal.x, goal.y, tol, needed, hold
    )
    world.validate()
    used = trace[: steps + 1].copy()
    if completed_row >= 0:
        return TrialResult(task, start_ref, goal, used, True,
                           float(trace[completed_row, L.R_T] - t0))
    return TrialResult(task, start_ref, goal, used, False, None)


def run_pause(world: World, target: Vec2, duration: float) -> None:
    """Hold the leader target fixed for ``duration`` seconds (between tasks)."""
    cfg = world.bundle.sim
    n = int(round(duration / cfg.dt))
    if n <= 0:
        return
    targets = np.tile([target.x, target.y], (n, 1))
    scratch = np.zeros((n, L.RECORD_SIZE))
    kernel.run_steps(world.S, world.P, targets, scratch, 0, 0.0, 0.0, -1.0, 0, 0)
    world.validate()


def run_set(bundle: ParamBundle, task_set: TaskSet, library_index: int = -1,
            start: Vec2 = Vec2(0.0, 0.0)) -> SetResult:
    """Run all eight tasks of a set with pauses in between; world persists."""
    world = World(bundle, start=start)
    goals = goal_sequence(task_set, start)
    target = start
    trials = []
    for i, (task, goal) in enumerate(zip(task_set.ordering, goals)):
        trials.append(run_task(world, task, goal, target))
        target = goal
        if i < len(goals) - 1:
            run_pause(world, target, bundle.sim.pause_duration)
    return SetResult(library_index, task_set, trials)


def run_session(bundle: ParamBundle, n_sets: int, seed: int,
                library: Sequence[TaskSet] | None = None) -> SessionLog:
    """Draw ``n_sets`` distinct sets and run them on fresh worlds."""
    if n_sets < 1:
        raise ParameterError(f"n_sets must be >= 1, got {n_sets}")
    half = bundle.sim.workspace_half_width
    if library is None:
        library = enumerate_valid_sets(half)
    indices = sample_distinct_indices(len(library), n_sets, seed)
    sets = []
    for i in indices:
        sets.append(run_set(bundle, library[i], library_index=i))
    return SessionLog(
        seed=seed,
        n_sets=n_sets,
        workspace_half_width=half,
        sets=sets,
        config=bundle_config_dict(bundle),
    )


# ---------------------------------------------------------------------------
# Serialization


def bundle_config_dict(bundle: ParamBundle) -> dict:
    c, b, a, l, s, body = (bundle.controller, bundle.base, bundle.arm,
                           bundle.leader, bundle.sim, bundle.cmo)
    spring = bundle.resolved_spring()
    return {
        "schema_version": SCHEMA_VERSION,
        "controller": {
            "k_p": c.k_p,
            "deadband": c.deadband,
            "v_max": c.v_max,
            "deadband_shape": c.deadband_shape,
            "reference_point": c.reference_point,
        },
        "base": {
            "v_cap": b.v_cap,
            "v_study": b.v_study,
            "accel_limit": b.accel_limit,
            "tracking_time_constant": b.tracking_time_constant,
            "castor_enabled": b.castor_enabled,
            "castor_threshold": b.castor_threshold,
            "castor_stall": b.castor_stall,
        },
        "arm": {
            "joint_arc_lengths": list(a.joint_arc_lengths),
            "rigid_link_lengths": list(a.rigid_link_lengths),
            "joint_stiffness": a.joint_stiffness,
            "joint_damping": a.joint_damping,
            "reference_bend": a.reference_bend,
            "mount_offset": [a.mount_offset.x, a.mount_offset.y],
        },
        "leader": {
            "policy": l.policy,
            "nominal_duration": l.nominal_duration,
            "gain": l.gain,
            "max_speed": l.max_speed,
            "grip_stiffness": l.grip_stiffness,
            "grip_damping": l.grip_damping,
        },
        "sim": {
            "dt": s.dt,
            "translational_damping": s.translational_damping,
            "rotational_damping": s.rotational_damping,
            "workspace_half_width": s.workspace_half_width,
            "completion_tolerance": s.completion_tolerance,
            "completion_hold": s.completion_hold,
            "task_timeout": s.task_timeout,
            "pause_duration": s.pause_duration,
            "rng_seed": s.rng_seed,
        },
        "cmo": {
            "length": body.length,
            "width": body.width,
            "mass": body.mass,
            "handle_offset": [body.handle_offset.x, body.handle_offset.y],
            "plate_offset": [body.plate_offset.x, body.plate_offset.y],
        },
        "endpoint_spring": {
            "stiffness": spring.stiffness,
            "damping": spring.damping,
        },
    }


def trace_filename(set_index: int, task_index: int, task: Task) -> str:
    return f"set{set_index:02d}_task{task_index}_{task.code}.csv"


def export_session(log: SessionLog, out_dir) -> Path:
    """Write per-trial trace CSVs and the session JSON; returns the JSON path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sets_payload = []
    for si, set_result in enumerate(log.sets):
        trials_payload = []
        for ti, trial in enumerate(set_result.trials):
            fname = trace_filename(si, ti, trial.task)
            (out / fname).write_text(trial.trace_csv())
            trials_payload.append({
                "task": trial.task.code,
                "start": [trial.start.x, trial.start.y],
                "goal": [trial.goal.x, trial.goal.y],
                "completed": trial.completed,
                "completion_time": trial.completion_time,
                "trace_file": fname,
            })
        sets_payload.append({
            "set_index": si,
            "library_index": set_result.library_index,
            "tasks": set_result.task_set.codes(),
            "trials": trials_payload,
        })
    payload = {
        "schema_version": SCHEMA_VERSION,
        "seed": log.seed,
        "n_sets": log.n_sets,
        "workspace_half_width": log.workspace_half_width,
        "config": log.config,
        "sets": sets_payload,
    }
    path = out / "session.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
