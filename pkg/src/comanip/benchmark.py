"""Stepping-backend benchmark: compiled kernel vs pure-Python twin."""

from __future__ import annotations

import time

import numpy as np

from . import _kernel_py
from . import _layout as L
from .model import Vec2
from .sim import ParamBundle, World


def _measure(kernel_module, n_steps: int) -> tuple:
    """Steps/s plus the final state vector for an agreement check."""
    world = World(ParamBundle())
    S, P = world.S, world.P
    targets = np.empty((n_steps, 2))
    dt = P[L.P_DT]
    # a leader weaving around the workspace keeps every code path busy
    t = np.arange(n_steps) * dt
    targets[:, 0] = 0.6 * np.sin(0.4 * t)
    targets[:, 1] = 0.6 * np.sin(0.23 * t + 1.0)
    trace = np.zeros((n_steps, L.RECORD_SIZE))
    start = time.perf_counter()
    kernel_module.run_steps(S, P, targets, trace, 0, 0.0, 0.0, -1.0, 0, 0)
    elapsed = time.perf_counter() - start
    return n_steps / elapsed, S.copy()


def run_benchmark(n_steps: int = 200000) -> dict:
    """Measure both backends (when available) and verify they agree."""
    rates = {}
    rates["python"], final_py = _measure(_kernel_py, n_steps)
    result = {"rates": rates, "n_steps": n_steps}
    try:
        from . import _kernel
    except ImportError:
        return result
    rates["cython"], final_cy = _measure(_kernel, n_steps)
    result["speedup"] = rates["cython"] / rates["python"]
    result["max_state_difference"] = float(np.max(np.abs(final_py - final_cy)))
    return result
