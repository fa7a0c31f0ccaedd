import math

import numpy as np
import pytest

from comanip.leader import (
    DECOMPOSED,
    MIN_JERK,
    PROPORTIONAL,
    LeaderParams,
    default_duration,
    leader_force,
    leader_target,
)
from comanip.model import ParameterError, Vec2

START = Vec2(0.0, 0.0)
GOAL = Vec2(1.0, 0.0)


def test_min_jerk_boundaries():
    p = LeaderParams(nominal_duration=4.0)
    assert leader_target(0.0, START, GOAL, p) == START
    assert leader_target(4.0, START, GOAL, p) == GOAL
    assert leader_target(10.0, START, GOAL, p) == GOAL


def test_min_jerk_peak_speed():
    """Quintic peak speed is 1.875 * distance / duration at mid-time."""
    p = LeaderParams(nominal_duration=4.0)
    h = 1e-6
    mid = 2.0
    a = leader_target(mid - h, START, GOAL, p)
    b = leader_target(mid + h, START, GOAL, p)
    speed = (b.x - a.x) / (2 * h)
    assert speed == pytest.approx(1.875 * 1.0 / 4.0, rel=1e-6)
    # and that is the maximum over the profile
    ts = np.linspace(0.01, 3.99, 999)
    speeds = [
        (leader_target(t + h, START, GOAL, p).x - leader_target(t - h, START, GOAL, p).x) / (2 * h)
        for t in ts
    ]
    assert max(speeds) <= speed * (1 + 1e-9)


def test_proportional_decay():
    p = LeaderParams(policy=PROPORTIONAL, gain=0.8)
    d0 = (GOAL - leader_target(0.0, START, GOAL, p)).norm()
    d1 = (GOAL - leader_target(1.0 / 0.8, START, GOAL, p)).norm()
    assert d1 == pytest.approx(d0 / math.e, rel=1e-9)


def test_decomposed_legs():
    p = LeaderParams(policy=DECOMPOSED, nominal_duration=8.0)
    goal = Vec2(1.0, 1.0)
    quarter = leader_target(2.0, START, goal, p)   # mid x-leg
    assert quarter.y == 0.0
    assert 0.0 < quarter.x < 1.0
    mid = leader_target(4.0, START, goal, p)       # x-leg done
    assert mid.x == pytest.approx(1.0)
    assert mid.y == pytest.approx(0.0)
    end = leader_target(8.0, START, goal, p)
    assert end == pytest.approx(Vec2(1.0, 1.0))


def test_continuity_in_time():
    for policy in (MIN_JERK, PROPORTIONAL, DECOMPOSED):
        p = LeaderParams(policy=policy, nominal_duration=5.0)
        goal = Vec2(1.0, -1.0)
        ts = np.linspace(0.0, 6.0, 2000)
        pts = [leader_target(float(t), START, goal, p) for t in ts]
        steps = [
            math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(pts, pts[1:])
        ]
        assert max(steps) < 0.01  # no jumps at leg or end boundaries


def test_max_speed_stretches_duration():
    p = LeaderParams(nominal_duration=1.0, max_speed=0.5)
    # distance 1 m in 1 s would peak at 1.875 m/s; the profile must stretch
    h = 1e-6
    ts = np.linspace(0.01, 3.74, 800)
    speeds = [
        (leader_target(t + h, START, GOAL, p).x - leader_target(t - h, START, GOAL, p).x) / (2 * h)
        for t in ts
    ]
    assert max(speeds) <= 0.5 * (1 + 1e-6)
    assert leader_target(3.75, START, GOAL, p).x == pytest.approx(1.0)


def test_default_durations_by_family():
    assert default_duration(Vec2(1.0, 0.0)) == 5.0
    assert default_duration(Vec2(0.0, -1.0)) == 6.0
    assert default_duration(Vec2(1.0, 1.0)) == 7.0


class TestForce:
    def test_zero_at_target_at_rest(self):
        p = LeaderParams()
        f = leader_force(Vec2(0.5, 0.5), Vec2(0.0, 0.0), Vec2(0.5, 0.5), p)
        assert f == Vec2(0.0, 0.0)

    def test_magnitude(self):
        p = LeaderParams(grip_stiffness=200.0, grip_damping=50.0)
        f = leader_force(Vec2(0.0, 0.0), Vec2(0.0, 0.0), Vec2(0.1, 0.0), p)
        assert f.x == pytest.approx(20.0)
        assert f.y == 0.0

    def test_linearity(self):
        p = LeaderParams(grip_stiffness=200.0)
        f1 = leader_force(Vec2(0.0, 0.0), Vec2(0.0, 0.0), Vec2(0.1, 0.0), p)
        f2 = leader_force(Vec2(0.0, 0.0), Vec2(0.0, 0.0), Vec2(0.2, 0.0), p)
        assert f2.x == pytest.approx(2.0 * f1.x)


def test_param_validation():
    with pytest.raises(ParameterError):
        LeaderParams(policy="teleport")
    with pytest.raises(ParameterError):
        LeaderParams(grip_stiffness=0.0)
    with pytest.raises(ParameterError):
        leader_target(-0.1, START, GOAL, LeaderParams())
