"""Deterministic planar co-manipulation simulator and benchmark harness.

A mobile base carries a passively compliant arm rigidly attached to one end of
a long object; a human (scripted or live) leads from the other end. The base
follows a displacement-based velocity controller; tasks, sets, metrics and
statistics mirror the published co-manipulation benchmark protocol.
"""

from ._backend import BACKEND_NAME
from .model import CmoBody, Pose2, SimConfig, Vec2
from .controller import ControllerParams, ControllerState, command_velocity
from .sim import ParamBundle, World, run_session, run_set, run_task

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "CmoBody",
    "ControllerParams",
    "ControllerState",
    "ParamBundle",
    "Pose2",
    "SimConfig",
    "Vec2",
    "World",
    "command_velocity",
    "run_session",
    "run_set",
    "run_task",
    "__version__",
]
