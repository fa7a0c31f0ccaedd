"""Per-trial and aggregate benchmark metrics.

Completion time is recomputed from a trace with exactly the alignment scan the
simulation uses, so analysis of an exported run reproduces the in-run numbers
bit for bit. Scaled path length divides the traversed reference-point path by
the direct distance between the path's own start and end points, so 1.0 is a
perfectly straight move and the triangle inequality keeps it >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _layout as L
from .model import ParameterError, Vec2

TASK_ROW_ORDER = ("x+", "x-", "x±", "y+", "y-", "y±", "xy++", "xy--", "xy±±", "overall")

POOLED_ROWS = {
    "x±": ("x+", "x-"),
    "y±": ("y+", "y-"),
    "xy±±": ("xy++", "xy--"),
    # The two anti-diagonal tasks have no counterpart in the human-human
    # benchmark, so the overall row pools only the six comparable tasks.
    "overall": ("x+", "x-", "y+", "y-", "xy++", "xy--"),
}


class MetricError(ValueError):
    """Raised when a metric is undefined for the given input."""


def reference_track(trace: np.ndarray, reference_point: str = "cmo_center",
                    plate_offset: Vec2 = Vec2(-0.685, 0.0)) -> np.ndarray:
    """Reference-point positions (n, 2) from a trace, matching the stepper."""
    if reference_point == "cmo_center":
        return trace[:, [L.R_CMO_X, L.R_CMO_Y]]
    yaw = trace[:, L.R_CMO_YAW]
    c = np.cos(yaw)
    s = np.sin(yaw)
    out = np.empty((len(trace), 2))
    out[:, 0] = trace[:, L.R_CMO_X] + c * plate_offset.x - s * plate_offset.y
    out[:, 1] = trace[:, L.R_CMO_Y] + s * plate_offset.x + c * plate_offset.y
    return out


def completion_scan(ref: np.ndarray, goal: Vec2, tolerance: float, hold_rows: int) -> int | None:
    """First row index at which alignment has been held for ``hold_rows`` rows."""
    d2 = (ref[:, 0] - goal.x) ** 2 + (ref[:, 1] - goal.y) ** 2
    aligned = d2 <= tolerance * tolerance
    run = 0
    for i, ok in enumerate(aligned):
        run = run + 1 if ok else 0
        if run >= hold_rows:
            return i
    return None


def completion_time(trial) -> float:
    """Seconds from task start to first sustained alignment of a completed trial."""
    if not trial.completed or trial.completion_time is None:
        raise MetricError(f"completion time undefined for incomplete trial {trial.task.code}")
    return trial.completion_time


def completion_time_from_trace(trace: np.ndarray, goal: Vec2, tolerance: float,
                               hold_rows: int, reference_point: str = "cmo_center",
                               plate_offset: Vec2 = Vec2(-0.685, 0.0)) -> float | None:
    ref = reference_track(trace, reference_point, plate_offset)
    row = completion_scan(ref, goal, tolerance, hold_rows)
    if row is None:
        return None
    return float(trace[row, L.R_T] - trace[0, L.R_T])


def path_length(points: np.ndarray) -> float:
    seg = np.diff(points, axis=0)
    return float(np.sum(np.sqrt(np.sum(seg * seg, axis=1))))


def scaled_path_length(trace: np.ndarray, start: Vec2, goal: Vec2,
                       reference_point: str = "cmo_center",
                       plate_offset: Vec2 = Vec2(-0.685, 0.0)) -> float:
    """Traversed reference-point path over the direct start-to-end distance.

    ``start``/``goal`` describe the nominal task and guard against degenerate
    zero-length tasks; the denominator is the distance between the trace's own
    first and last reference points, which is what makes 1.0 the floor.
    """
    if start == goal:
        raise MetricError("scaled path length undefined for a zero-displacement task")
    ref = reference_track(trace, reference_point, plate_offset)
    if len(ref) < 2:
        raise MetricError("trace too short for a path length")
    direct = float(np.hypot(ref[-1, 0] - ref[0, 0], ref[-1, 1] - ref[0, 1]))
    if direct == 0.0:
        raise MetricError("trace starts and ends at the same point")
    return path_length(ref) / direct


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray   # len(counts) + 1, contiguous
    counts: np.ndarray
    mean: float
    sd: float

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def to_csv(self) -> str:
        lines = ["bin_left,count"]
        for left, c in zip(self.bin_edges[:-1], self.counts):
            lines.append(f"{left!r},{int(c)}")
        return "\n".join(lines) + "\n"


def velocity_samples(trace: np.ndarray, axis: str, dt: float,
                     reference_point: str = "cmo_center",
                     plate_offset: Vec2 = Vec2(-0.685, 0.0)) -> np.ndarray:
    """Central-difference reference-point velocities along one world axis."""
    if axis not in ("x", "y"):
        raise ParameterError(f"axis must be 'x' or 'y', got {axis!r}")
    ref = reference_track(trace, reference_point, plate_offset)
    col = 0 if axis == "x" else 1
    p = ref[:, col]
    if len(p) < 3:
        raise MetricError("trace too short for central differences")
    return (p[2:] - p[:-2]) / (2.0 * dt)


def velocity_histogram(samples_list: Sequence[np.ndarray], bin_width: float = 0.05,
                       v_range: tuple = (-1.0, 1.0)) -> Histogram:
    """Bin pooled velocity samples; outliers clip into the edge bins."""
    if not samples_list:
        raise MetricError("no velocity samples to bin")
    v = np.concatenate([np.asarray(s, dtype=float) for s in samples_list])
    if v.size == 0:
        raise MetricError("no velocity samples to bin")
    lo, hi = v_range
    n_bins = int(round((hi - lo) / bin_width))
    edges = lo + np.arange(n_bins + 1) * bin_width
    clipped = np.clip(v, lo, np.nextafter(hi, lo))
    counts, _ = np.histogram(clipped, bins=edges)
    mean = float(np.mean(v))
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return Histogram(bin_edges=edges, counts=counts, mean=mean, sd=sd)


@dataclass(frozen=True)
class TaskSummary:
    task_code: str
    n: int
    mean: float
    sd: float


def _summary(code: str, values: Sequence[float]) -> TaskSummary:
    arr = np.asarray(values, dtype=float)
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return TaskSummary(task_code=code, n=int(arr.size), mean=float(np.mean(arr)), sd=sd)


def summarize_by_task(values_by_code: dict) -> list:
    """Mean +- sample SD per task code plus the pooled benchmark rows.

    ``values_by_code`` maps a task code to its list of metric values. Rows with
    no data are omitted. The two anti-diagonal tasks get their own rows but do
    not enter the pooled ones (see ``POOLED_ROWS``).
    """
    out = []
    for code in ("x+", "x-", "y+", "y-", "xy++", "xy--", "xy+-", "xy-+"):
        vals = values_by_code.get(code, [])
        if vals:
            out.append(_summary(code, vals))
    for code, members in POOLED_ROWS.items():
        pooled = [v for m in members for v in values_by_code.get(m, [])]
        if pooled:
            out.append(_summary(code, pooled))
    return out


def summaries_to_dict(summaries: Sequence[TaskSummary]) -> dict:
    return {s.task_code: {"n": s.n, "mean": s.mean, "sd": s.sd} for s in summaries}
