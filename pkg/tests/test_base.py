import math

import pytest

from comanip.base import BaseParams, BaseState, track_velocity
from comanip.model import ParameterError, Pose2, Vec2


def advance(cmd, state, params, dt, n):
    for _ in range(n):
        state = track_velocity(cmd, state, params, dt)
    return state


def test_rest_is_fixed_point():
    p = BaseParams()
    s = BaseState()
    s2 = track_velocity(Vec2(0.0, 0.0), s, p, 0.01)
    assert s2.velocity == Vec2(0.0, 0.0)
    assert s2.pose.position == Vec2(0.0, 0.0)


def test_first_order_step_response():
    """With the acceleration clamp inactive, v(t) = cmd (1 - exp(-t/tau))."""
    p = BaseParams(accel_limit=100.0, tracking_time_constant=0.2)
    s = BaseState()
    dt = 0.01
    cmd = Vec2(0.3, 0.0)
    for i in range(200):
        s = track_velocity(cmd, s, p, dt)
        t = (i + 1) * dt
        expected = 0.3 * (1.0 - math.exp(-t / 0.2))
        assert s.velocity.x == pytest.approx(expected, rel=1e-9)


def test_study_speed_limit():
    p = BaseParams()
    s = advance(Vec2(3.0, 4.0), BaseState(), p, 0.01, 2000)
    assert s.velocity.norm() <= p.v_study + 1e-12


def test_transient_cap():
    p = BaseParams(v_study=5.0, v_cap=5.0, accel_limit=1e6, tracking_time_constant=1e-4)
    s = advance(Vec2(100.0, 0.0), BaseState(), p, 0.01, 10)
    assert s.velocity.norm() <= p.v_cap + 1e-12


def test_accel_clamp():
    p = BaseParams(accel_limit=0.5, tracking_time_constant=0.01)
    s = BaseState()
    prev = Vec2(0.0, 0.0)
    dt = 0.01
    for _ in range(100):
        s = track_velocity(Vec2(0.5, 0.0), s, p, dt)
        dv = (s.velocity - prev).norm()
        assert dv <= p.accel_limit * dt + 1e-12
        prev = s.velocity


def test_castor_stall_window():
    """A 180 degree command flip zeroes velocity for exactly the stall time."""
    p = BaseParams(castor_enabled=True, castor_stall=0.3, accel_limit=100.0)
    dt = 0.01
    s = advance(Vec2(0.4, 0.0), BaseState(), p, dt, 300)  # settled forward
    assert s.velocity.x == pytest.approx(0.4, abs=1e-3)
    flipped = Vec2(-0.4, 0.0)
    speeds = []
    for _ in range(60):
        s = track_velocity(flipped, s, p, dt)
        speeds.append(s.velocity.norm())
    n_stalled = int(round(p.castor_stall / dt))
    assert all(v == 0.0 for v in speeds[:n_stalled])
    assert speeds[n_stalled] > 0.0  # lag response resumes right after
    # and the response tracks the first-order lag from zero
    expected = 0.4 * (1.0 - math.exp(-dt / p.tracking_time_constant))
    assert speeds[n_stalled] == pytest.approx(expected, rel=1e-6)


def test_castor_small_change_no_stall():
    p = BaseParams(castor_enabled=True, castor_threshold=math.pi / 3)
    dt = 0.01
    s = advance(Vec2(0.3, 0.0), BaseState(), p, dt, 200)
    s = track_velocity(Vec2(0.3, 0.1), s, p, dt)  # ~18 degrees, below threshold
    assert s.velocity.norm() > 0.0


def test_castor_disabled_continuous_velocity():
    p = BaseParams(castor_enabled=False, accel_limit=2.0)
    s = BaseState()
    dt = 0.01
    prev = 0.0
    for i in range(400):
        cmd = Vec2(0.4, 0.0) if i < 200 else Vec2(-0.4, 0.0)
        s = track_velocity(cmd, s, p, dt)
        assert abs(s.velocity.x - prev) <= p.accel_limit * dt + 1e-12
        prev = s.velocity.x


def test_determinism():
    p = BaseParams(castor_enabled=True)
    cmds = [Vec2(0.3 * math.sin(0.1 * i), 0.3 * math.cos(0.13 * i)) for i in range(500)]

    def run():
        s = BaseState()
        out = []
        for c in cmds:
            s = track_velocity(c, s, p, 0.01)
            out.append((s.pose.position.x, s.pose.position.y, s.velocity.x, s.velocity.y))
        return out

    assert run() == run()


def test_param_validation():
    with pytest.raises(ParameterError):
        BaseParams(v_study=0.0)
    with pytest.raises(ParameterError):
        BaseParams(v_study=6.0, v_cap=5.0)
    with pytest.raises(ParameterError):
        BaseParams(accel_limit=0.0)
    with pytest.raises(ParameterError):
        track_velocity(Vec2(math.nan, 0.0), BaseState(), BaseParams(), 0.01)
