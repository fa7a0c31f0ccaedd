"""The eight canonical translation tasks and their valid orderings.

A set is one ordering of all eight unit translations (four axis moves, four
diagonals). Because the displacements cancel pairwise, every set starts and
ends at the workspace center; a set is valid when every intermediate position
stays inside the square workspace. Orderings are enumerated exhaustively and
sampled with an explicit, portable 64-bit generator (splitmix64) so runs
reproduce across platforms.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

from .model import ParameterError, Vec2

# Canonical task order; codes mirror the +-1 m displacement components.
TASK_CODES = ("x+", "x-", "y+", "y-", "xy++", "xy--", "xy+-", "xy-+")
_DISPLACEMENTS = {
    "x+": (1, 0),
    "x-": (-1, 0),
    "y+": (0, 1),
    "y-": (0, -1),
    "xy++": (1, 1),
    "xy--": (-1, -1),
    "xy+-": (1, -1),
    "xy-+": (-1, 1),
}


@dataclass(frozen=True)
class Task:
    code: str

    def __post_init__(self):
        if self.code not in _DISPLACEMENTS:
            raise ParameterError(f"unknown task code {self.code!r}")

    @property
    def displacement(self) -> Vec2:
        dx, dy = _DISPLACEMENTS[self.code]
        return Vec2(float(dx), float(dy))

    @property
    def is_diagonal(self) -> bool:
        dx, dy = _DISPLACEMENTS[self.code]
        return dx != 0 and dy != 0

    @property
    def family(self) -> str:
        """Pooling family: ``"x"``, ``"y"`` or ``"xy"``."""
        dx, dy = _DISPLACEMENTS[self.code]
        if dx != 0 and dy != 0:
            return "xy"
        return "x" if dx != 0 else "y"


ALL_TASKS = tuple(Task(code) for code in TASK_CODES)


@dataclass(frozen=True)
class TaskSet:
    ordering: tuple  # tuple of 8 Task, each exactly once
    valid: bool

    def codes(self) -> list:
        return [t.code for t in self.ordering]


def _is_valid_ordering(displacements: Sequence[tuple], half_width: float) -> bool:
    x = 0
    y = 0
    for dx, dy in displacements:
        x += dx
        y += dy
        if x > half_width or -x > half_width or y > half_width or -y > half_width:
            return False
    return True


def enumerate_valid_sets(
    workspace_half_width: float = 1.0, tasks: Sequence[Task] = ALL_TASKS
) -> list:
    """All orderings of ``tasks`` whose partial sums stay inside the workspace.

    Orderings are produced in lexicographic order of the canonical task
    indexing. The integer displacement components make the partial-sum check
    exact.
    """
    if workspace_half_width <= 0.0:
        raise ParameterError(f"workspace_half_width must be positive, got {workspace_half_width}")
    disp = [_DISPLACEMENTS[t.code] for t in tasks]
    out = []
    for perm in itertools.permutations(range(len(tasks))):
        if _is_valid_ordering([disp[i] for i in perm], workspace_half_width):
            out.append(TaskSet(tuple(tasks[i] for i in perm), valid=True))
    return out


def count_orderings(tasks: Sequence[Task] = ALL_TASKS) -> int:
    n = len(tasks)
    total = 1
    for k in range(2, n + 1):
        total *= k
    return total


class SplitMix64:
    """splitmix64: tiny public-domain 64-bit generator (Steele et al.).

    state' = state + 0x9E3779B97F4A7C15; output mixes the new state through
    two xor-shift-multiply rounds. Used for all set sampling so sequences are
    identical on every platform.
    """

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ParameterError(f"n must be positive, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n


def sample_set(library: Sequence[TaskSet], seed: int) -> TaskSet:
    """Uniform deterministic draw from an enumerated library."""
    if not library:
        raise ParameterError("cannot sample from an empty set library")
    return library[SplitMix64(seed).next_below(len(library))]


def sample_distinct_indices(n_items: int, n: int, seed: int) -> list:
    """Draw ``n`` distinct indices into a library, rejecting repeats."""
    if n > n_items:
        raise ParameterError(f"cannot draw {n} distinct sets from a library of {n_items}")
    rng = SplitMix64(seed)
    chosen: list = []
    seen: set = set()
    while len(chosen) < n:
        i = rng.next_below(n_items)
        if i not in seen:
            seen.add(i)
            chosen.append(i)
    return chosen


def sample_distinct_sets(library: Sequence[TaskSet], n: int, seed: int) -> list:
    """Draw ``n`` distinct sets, rejecting repeats, in draw order."""
    return [library[i] for i in sample_distinct_indices(len(library), n, seed)]


def goal_sequence(task_set: TaskSet, start: Vec2) -> list:
    """Cumulative goal positions for a set; the last goal equals ``start``."""
    if not task_set.valid:
        raise ParameterError("cannot build goals for an invalid set")
    goals = []
    x, y = start.x, start.y
    for task in task_set.ordering:
        d = task.displacement
        x += d.x
        y += d.y
        goals.append(Vec2(x, y))
    return goals


def sets_to_json(sets: Sequence[TaskSet]) -> str:
    """JSON document: count header plus one task-code array per set."""
    payload = {
        "count": len(sets),
        "total_orderings": count_orderings(),
        "sets": [s.codes() for s in sets],
    }
    return json.dumps(payload, indent=2)


def set_from_codes(codes: Sequence[str]) -> TaskSet:
    tasks = tuple(Task(c) for c in codes)
    if sorted(t.code for t in tasks) != sorted(TASK_CODES):
        raise ParameterError(f"a set must contain each of the 8 tasks exactly once, got {codes}")
    disp = [_DISPLACEMENTS[t.code] for t in tasks]
    return TaskSet(tasks, valid=_is_valid_ordering(disp, 1.0))
