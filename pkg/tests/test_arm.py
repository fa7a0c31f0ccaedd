import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from comanip.arm import (
    ArmConfig,
    ConfigurationError,
    EndpointSpring,
    JointBend,
    JointPlant,
    MracParams,
    MracState,
    ReductionError,
    Transform,
    arc_coefficients,
    endpoint_spring_from_config,
    estimate_bends_from_orientations,
    fk_chain,
    fk_segment,
    freeze_gain,
    home_offset,
    mrac_step,
    restoring_force,
    segment_orientations,
)
from comanip.model import ParameterError, Vec2


class TestSegment:
    def test_straight_limit(self):
        t = fk_segment(JointBend(0.0, 0.0), 0.3)
        assert np.allclose(t.translation, [0.0, 0.0, 0.3])
        assert np.allclose(t.rotation, np.eye(3))

    def test_quarter_circle(self):
        t = fk_segment(JointBend(0.0, math.pi / 2), 1.0)
        r = 2.0 / math.pi  # quarter-arc radius for unit arc length
        assert t.translation[0] == pytest.approx(r, abs=1e-12)
        assert t.translation[2] == pytest.approx(r, abs=1e-12)
        assert t.translation[1] == pytest.approx(0.0, abs=1e-15)
        angle = Rotation.from_matrix(t.rotation).magnitude()
        assert angle == pytest.approx(math.pi / 2, abs=1e-12)

    def test_two_stacked_segments_compose(self):
        """Composition of two single-segment transforms is the oracle."""
        b1, b2 = JointBend(0.2, -0.4), JointBend(-0.1, 0.3)
        composed = fk_segment(b1, 0.25).compose(fk_segment(b2, 0.3))
        r1 = Rotation.from_rotvec([b1.u, b1.v, 0.0]).as_matrix()
        r2 = Rotation.from_rotvec([b2.u, b2.v, 0.0]).as_matrix()
        p1 = fk_segment(b1, 0.25).translation
        p2 = fk_segment(b2, 0.3).translation
        assert np.allclose(composed.rotation, r1 @ r2, atol=1e-12)
        assert np.allclose(composed.translation, r1 @ p2 + p1, atol=1e-12)

    def test_bend_at_pi_rejected(self):
        with pytest.raises(ConfigurationError):
            fk_segment(JointBend(math.pi, 0.0), 0.25)

    def test_series_branch_agrees_with_arc_formula(self):
        theta = 1e-5
        f_exact = 2.0 * math.sin(theta / 2) ** 2 / theta**2
        g_exact = math.sin(theta) / theta
        f_series = 0.5 - theta**2 / 24.0
        g_series = 1.0 - theta**2 / 6.0
        f, g = arc_coefficients(theta)
        for value in (f_exact, f_series):
            assert f == pytest.approx(value, abs=1e-9)
        for value in (g_exact, g_series):
            assert g == pytest.approx(value, abs=1e-9)


class TestChain:
    def test_all_straight(self):
        cfg = ArmConfig()
        t = fk_chain([JointBend(0.0, 0.0)] * 3, cfg)
        total = sum(cfg.joint_arc_lengths) + sum(cfg.rigid_link_lengths)
        assert np.allclose(t.translation, [0.0, 0.0, total])

    def test_reference_pose_matches_brute_force(self):
        """Independent oracle: explicit 4x4 matrix composition."""
        cfg = ArmConfig()
        bends = cfg.homed_bends()
        t = fk_chain(bends, cfg)

        def mat(rot, trans):
            m = np.eye(4)
            m[:3, :3] = rot
            m[:3, 3] = trans
            return m

        m = np.eye(4)
        for bend, arc, link in zip(bends, cfg.joint_arc_lengths, cfg.rigid_link_lengths):
            theta = bend.theta
            rot = Rotation.from_rotvec([bend.u, bend.v, 0.0]).as_matrix()
            f = (1 - math.cos(theta)) / theta**2
            g = math.sin(theta) / theta
            pos = np.array([arc * bend.v * f, -arc * bend.u * f, arc * g])
            m = m @ mat(rot, pos) @ mat(np.eye(3), [0, 0, link])
        assert np.allclose(t.rotation, m[:3, :3], atol=1e-10)
        assert np.allclose(t.translation, m[:3, 3], atol=1e-10)

    def test_single_joint_reduction(self):
        cfg = ArmConfig()
        bends = [JointBend(0.3, -0.2), JointBend(0.0, 0.0), JointBend(0.0, 0.0)]
        t = fk_chain(bends, cfg)
        seg = fk_segment(bends[0], cfg.joint_arc_lengths[0])
        straight = sum(cfg.joint_arc_lengths[1:]) + sum(cfg.rigid_link_lengths)
        expected = seg.compose(Transform(np.eye(3), np.array([0.0, 0.0, straight])))
        assert np.allclose(t.translation, expected.translation, atol=1e-12)


class TestEstimation:
    def test_identity_orientations(self):
        cfg = ArmConfig()
        bends = estimate_bends_from_orientations([np.eye(3)] * 3, cfg)
        assert all(b.u == 0.0 and b.v == 0.0 for b in bends)

    def test_round_trip_1000_random_configs(self, rng):
        cfg = ArmConfig()
        worst = 0.0
        for _ in range(1000):
            bends = [JointBend(*rng.uniform(-1.2, 1.2, 2)) for _ in range(3)]
            est = estimate_bends_from_orientations(segment_orientations(bends), cfg)
            for b, e in zip(bends, est):
                worst = max(worst, abs(b.u - e.u), abs(b.v - e.v))
        assert worst < 1e-9

    def test_half_turn_ambiguous(self):
        cfg = ArmConfig()
        flip = Rotation.from_rotvec([math.pi, 0.0, 0.0]).as_matrix()
        with pytest.raises(ConfigurationError):
            estimate_bends_from_orientations([flip, flip, flip], cfg)


class TestMrac:
    def test_zero_error_fixed_point(self):
        ref = math.pi / 6
        state = MracState(adaptive_gain=0.0, model_angle=ref, model_rate=0.0)
        params = MracParams()
        torque, new = mrac_step((ref, 0.0), state, ref, 0.01, params)
        assert torque == pytest.approx(params.stiffness_feedforward * ref)
        assert new.adaptive_gain == 0.0

    def test_freeze_contract(self):
        state = freeze_gain(MracState(adaptive_gain=2.5))
        _, new = mrac_step((0.1, 0.0), state, math.pi / 6, 0.01)
        assert new.adaptive_gain == 2.5
        assert freeze_gain(state) == state  # idempotent

    def test_freeze_thousand_steps_zero_drift(self):
        state = freeze_gain(MracState(adaptive_gain=1.25))
        plant = JointPlant(load_torque=1.0)
        for _ in range(1000):
            torque, state = mrac_step((plant.angle, plant.rate), state, math.pi / 6, 0.01)
            plant.step(torque, 0.01)
        assert state.adaptive_gain == 1.25

    @pytest.mark.parametrize("load", [0.0, 3.0])
    def test_homing_converges(self, load):
        ref = math.pi / 6
        plant = JointPlant(load_torque=load)
        state = MracState()
        dt = 0.01
        for _ in range(1000):
            torque, state = mrac_step((plant.angle, plant.rate), state, ref, dt)
            plant.step(torque, dt)
        assert abs(plant.angle - ref) <= math.radians(0.5)

    def test_frozen_degenerates_to_fixed_gain_pd(self):
        """Frozen, zero feedforward, zero adaptive term: torque is the fixed PD law."""
        params = MracParams(stiffness_feedforward=0.0)
        state = freeze_gain(MracState(adaptive_gain=0.0, model_angle=0.4, model_rate=-0.1))
        measured = (0.25, 0.3)
        torque, new = mrac_step(measured, state, 0.5, 0.01, params)
        e = new.model_angle - measured[0]
        edot = new.model_rate - measured[1]
        assert torque == pytest.approx(params.feedback_gain * (e + params.rate_weight * edot))


class TestEndpointSpring:
    def test_homogeneous_in_joint_stiffness(self):
        s1 = endpoint_spring_from_config(ArmConfig(joint_stiffness=35.0))
        s2 = endpoint_spring_from_config(ArmConfig(joint_stiffness=70.0))
        assert s2.stiffness / s1.stiffness == pytest.approx(2.0, rel=1e-9)

    def test_positive_finite(self):
        s = endpoint_spring_from_config(ArmConfig())
        assert 0.0 < s.stiffness < math.inf
        assert 0.0 <= s.damping < math.inf

    def test_matches_energy_oracle(self):
        """KKT minimum-energy oracle: stiffness_xx = 2 E(min) for a unit tip move."""
        from comanip.arm import _planar_jacobian

        cfg = ArmConfig()
        bends = cfg.homed_bends()
        jac = _planar_jacobian(cfg, bends)
        k = cfg.joint_stiffness
        K = np.eye(6) * k
        vals = []
        for target in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            kkt = np.block([[K, jac.T], [jac, np.zeros((2, 2))]])
            rhs = np.concatenate([np.zeros(6), target])
            sol = np.linalg.solve(kkt, rhs)
            dq = sol[:6]
            vals.append(dq @ K @ dq)  # 2 * energy of the unit displacement
        oracle = float(np.mean(vals))
        s = endpoint_spring_from_config(cfg)
        assert s.stiffness == pytest.approx(oracle, rel=0.01)

    def test_restoring_force(self):
        sp = EndpointSpring(stiffness=100.0, damping=0.0, neutral_point=Vec2(0.0, 0.0))
        assert restoring_force(sp, Vec2(0.0, 0.0), Vec2(0.0, 0.0)) == Vec2(0.0, 0.0)
        f = restoring_force(sp, Vec2(0.1, 0.0), Vec2(0.0, 0.0))
        assert f.x == pytest.approx(-10.0)
        g = restoring_force(sp, Vec2(-0.1, 0.0), Vec2(0.0, 0.0))
        assert g.x == pytest.approx(10.0)

    def test_singular_sensitivity_rejected(self, monkeypatch):
        import comanip.arm as arm_mod

        monkeypatch.setattr(arm_mod, "_planar_jacobian", lambda *a, **k: np.zeros((2, 6)))
        with pytest.raises(ReductionError):
            endpoint_spring_from_config(ArmConfig())

    def test_home_offset_sagittal(self):
        off = home_offset(ArmConfig())
        assert off.x > 0.0
        assert off.y == pytest.approx(0.0, abs=1e-12)


def test_config_validation():
    with pytest.raises(ParameterError):
        ArmConfig(joint_arc_lengths=(0.25, 0.25))
    with pytest.raises(ParameterError):
        ArmConfig(joint_stiffness=0.0)
