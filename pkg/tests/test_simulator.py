import json
import math

import numpy as np
import pytest

from jparse.controller import ControllerGains
from jparse.geometry import PoseSE3
from jparse.kinematics import forward_kinematics
from jparse.models import planar2r
from jparse.resolvers import JParse
from jparse.simulator import (
    FixedGoal,
    KeypointList,
    Scenario,
    SinusoidTrack,
    TrajectoryLog,
    builtin_scenario,
    builtin_scenarios,
    csv_header,
    log_to_csv,
    run_scenario,
    scenario_from_json,
    scenario_to_json,
    summarize,
)


def make_log(q_dot_rows, dt=0.01):
    """Synthetic log with the given per-step joint velocities."""
    steps, n = q_dot_rows.shape
    zeros = np.zeros(steps)
    return TrajectoryLog(
        t=np.arange(steps) * dt,
        q=np.cumsum(q_dot_rows, axis=0) * dt,
        q_dot=q_dot_rows,
        positions=np.zeros((steps, 3)),
        axes=np.tile([1.0, 0, 0], (steps, 1)),
        angles=zeros.copy(),
        pos_err=zeros.copy(),
        ori_err=zeros.copy(),
        twist_norm=zeros.copy(),
        sigma=np.ones((steps, 2)),
        inv_cond=np.ones(steps),
        lyapunov=zeros.copy(),
        flags=np.zeros((steps, 2), dtype=bool),
        dt=dt,
    )


class TestGoalSchedules:
    def test_fixed(self):
        pose = PoseSE3.from_position(1, 2, 3)
        assert FixedGoal(pose).pose_at(10.0) is pose

    def test_keypoints_advance_at_dwell_multiples(self):
        poses = tuple(PoseSE3.from_position(i, 0, 0) for i in range(3))
        sched = KeypointList(poses=poses, dwell_s=2.0)
        assert sched.pose_at(0.0) is poses[0]
        assert sched.pose_at(1.999) is poses[0]
        assert sched.pose_at(2.0) is poses[1]
        assert sched.pose_at(3.999) is poses[1]
        assert sched.pose_at(4.0) is poses[2]
        assert sched.pose_at(100.0) is poses[2]  # holds the last keypoint

    def test_sinusoid(self):
        fixed = PoseSE3.from_position(0.4, 0.0, 1.0)
        sched = SinusoidTrack(fixed=fixed, axis="y", amplitude=0.3, period=8.0)
        assert np.allclose(sched.pose_at(0.0).position, [0.4, 0.0, 1.0])
        assert sched.pose_at(2.0).position[1] == pytest.approx(0.3)
        assert sched.pose_at(6.0).position[1] == pytest.approx(-0.3)
        assert sched.pose_at(2.0).position[0] == pytest.approx(0.4)

    def test_validation(self):
        with pytest.raises(ValueError):
            KeypointList(poses=(), dwell_s=1.0)
        with pytest.raises(ValueError):
            SinusoidTrack(fixed=PoseSE3.from_position(0, 0, 0), axis="w",
                          amplitude=0.1, period=1.0)


class TestRunScenario:
    def test_determinism_bit_identical(self):
        s = builtin_scenario("2r_reach_out")
        a = run_scenario(s)
        b = run_scenario(s)
        assert np.array_equal(a.q, b.q)
        assert np.array_equal(a.q_dot, b.q_dot)
        assert np.array_equal(a.lyapunov, b.lyapunov)

    def test_row_count_and_time_grid(self):
        s = builtin_scenario("2r_reach_in")
        log = run_scenario(s)
        expected = int(round(s.duration_s / s.gains.dt))
        assert abs(len(log) - expected) <= 1
        dts = np.diff(log.t)
        assert np.allclose(dts, s.gains.dt, atol=1e-12)
        assert np.all(dts > 0)

    def test_fixed_goal_at_current_pose_is_stationary(self):
        model_q = (0.4, 0.9)
        pose = forward_kinematics(planar2r(), model_q)
        s = Scenario(
            name="hold", model_ref="planar2r", initial_q=model_q,
            goal_schedule=FixedGoal(pose),
            gains=ControllerGains.uniform(m=2, k_pos=0.1, dt=0.01),
            resolver=JParse(gamma=0.1), duration_s=0.5,
        )
        log = run_scenario(s)
        assert np.allclose(log.q_dot, 0.0, atol=1e-12)
        assert np.allclose(log.q, np.tile(model_q, (len(log), 1)), atol=1e-12)


class TestKeypointInvariant:
    def test_error_jumps_at_switches_and_decreases_between(self):
        # all-reachable keypoints, no nullspace bias
        model = planar2r()
        poses = tuple(
            forward_kinematics(model, q)
            for q in ([0.3, 0.8], [1.0, -0.9], [-0.4, 1.2])
        )
        s = Scenario(
            name="kp", model_ref="planar2r", initial_q=(0.0, 0.5),
            goal_schedule=KeypointList(poses=poses, dwell_s=30.0),
            gains=ControllerGains.uniform(m=2, k_pos=0.5, dt=0.01),
            resolver=JParse(gamma=0.1), duration_s=90.0,
        )
        log = run_scenario(s)
        switch_rows = [3000, 6000]
        dV = np.diff(log.lyapunov)
        for r in switch_rows:
            assert dV[r - 1] > 0  # error jumps upward when the goal moves
        mask = np.ones(len(dV), dtype=bool)
        for r in switch_rows:
            mask[r - 1] = False
        assert (dV[mask] > 1e-9).sum() == 0


class TestSummarize:
    def test_constant_velocity(self):
        log = make_log(np.tile([0.3, -0.2], (50, 1)))
        stats = summarize(log)
        assert stats.peak_joint_accel == 0.0
        assert stats.peak_joint_jerk == 0.0
        assert stats.peak_joint_speed == pytest.approx(0.3)
        assert stats.max_sigma_max_step == 0.0  # constant spectrum in make_log

    def test_linear_ramp(self):
        steps = 60
        ramp = np.linspace(0, 1.0, steps).reshape(-1, 1) * np.array([[1.0, 2.0]])
        log = make_log(ramp, dt=0.01)
        stats = summarize(log)
        dq = (1.0 / (steps - 1)) / 0.01
        assert stats.peak_joint_accel == pytest.approx(2 * dq, rel=1e-9)
        assert stats.peak_joint_jerk == pytest.approx(0.0, abs=1e-6)

    def test_reach_in_enters_singular_region(self):
        log = run_scenario(builtin_scenario("2r_reach_in"))
        stats = summarize(log)
        assert stats.min_inverse_condition_number <= 0.1

    def test_too_short(self):
        with pytest.raises(ValueError):
            summarize(make_log(np.zeros((2, 2))))


class TestCsv:
    def test_header_layout(self):
        assert csv_header(2, 2) == (
            "t,q0,q1,qd0,qd1,px,py,pz,ax,ay,az,theta,pos_err,ori_err,"
            "sig0,sig1,inv_cond,lyap,flags"
        )

    def test_rows_parse_back(self):
        s = builtin_scenario("2r_reach_in")
        s = Scenario(
            name=s.name, model_ref=s.model_ref, initial_q=s.initial_q,
            goal_schedule=s.goal_schedule, gains=s.gains, resolver=s.resolver,
            duration_s=1.0,
        )
        log = run_scenario(s)
        text = log_to_csv(log)
        lines = text.strip().split("\n")
        assert len(lines) == len(log) + 1
        first = lines[1].split(",")
        assert len(first) == len(lines[0].split(","))
        assert float(first[0]) == 0.0


class TestScenarioSerialization:
    def test_round_trip_all_builtins(self):
        for name, s in builtin_scenarios().items():
            again = scenario_from_json(scenario_to_json(s))
            assert again.model_ref == s.model_ref
            assert again.resolver == s.resolver
            assert np.allclose(again.initial_q, s.initial_q)
            assert again.duration_s == s.duration_s
            assert type(again.goal_schedule) is type(s.goal_schedule)

    def test_round_trip_identical_run(self):
        s = Scenario(
            name="rt", model_ref="planar2r", initial_q=(0.1, 0.2),
            goal_schedule=FixedGoal(PoseSE3.from_position(1.0, 0.5, 0.0)),
            gains=ControllerGains.uniform(m=2, k_pos=0.2, dt=0.01),
            resolver=JParse(gamma=0.05, a=2.0), duration_s=2.0, seed=3,
        )
        again = scenario_from_json(scenario_to_json(s))
        a, b = run_scenario(s), run_scenario(again)
        assert np.array_equal(a.q, b.q)
        assert np.array_equal(a.q_dot, b.q_dot)


class TestBuiltinScenarios:
    def test_required_names(self):
        names = set(builtin_scenarios())
        assert {"2r_reach_in", "2r_reach_out", "line_keypoints",
                "plane_keypoints", "sinusoid_gimbal"} <= names

    def test_line_keypoint_coordinates(self):
        s = builtin_scenario("line_keypoints")
        poses = s.goal_schedule.poses
        assert np.allclose(poses[2].position, [0.0, 0.0, 0.5])  # unreachable C
        assert np.allclose(poses[0].position, [1.0, 0.0, 0.5])
        assert s.goal_schedule.dwell_s == 20.0
        assert s.gains.k_pos == 10.0 and s.gains.k_ori == 10.0
        assert s.gains.twist_cap == pytest.approx(1.0)
        assert s.nullspace is not None and s.nullspace.cap == pytest.approx(0.6)

    def test_damped_baseline_is_more_sluggish_on_reach_in(self):
        from jparse.resolvers import DLS

        s = builtin_scenario("2r_reach_in")
        jp = run_scenario(s)
        dls = run_scenario(s.with_resolver(DLS(lam=0.17)))
        # both stall at the boundary residual, but damping slows the approach
        assert dls.pos_err[-1] == pytest.approx(0.2, abs=1e-3)
        assert dls.pos_err.mean() > jp.pos_err.mean()
        mid = slice(500, 2500)
        assert np.all(dls.pos_err[mid] >= jp.pos_err[mid] - 1e-12)

    def test_shaped_ramp_delays_deceleration(self):
        # a > 0 keeps S(xi) >= xi, so deceleration happens closer to the
        # singular region and the approach is never slower than a = 0
        s = builtin_scenario("2r_reach_in")
        plain = run_scenario(s.with_resolver(JParse(gamma=0.1, a=0.0)))
        shaped = run_scenario(s.with_resolver(JParse(gamma=0.1, a=3.0)))
        assert shaped.pos_err[-1] == pytest.approx(0.2, abs=1e-3)
        sample = slice(1500, 4000)
        assert np.all(shaped.pos_err[sample] <= plain.pos_err[sample] + 1e-12)
        assert shaped.pos_err[2000] < plain.pos_err[2000]

    def test_aggressively_tuned_adaptive_damping_blows_up_on_exit(self):
        # shrinking w0 narrows the damped band until the exit hands a nearly
        # bare pseudoinverse a tiny sigma: joint speeds spike two orders of
        # magnitude above the threshold-scaled resolver's bounded peak
        from jparse.resolvers import ADLS

        s = builtin_scenario("2r_reach_out")
        jp_peak = np.linalg.norm(run_scenario(s).q_dot, axis=1).max()
        log = run_scenario(s.with_resolver(ADLS(lambda0=0.17, w0=0.001)))
        peak = np.linalg.norm(log.q_dot, axis=1).max()
        assert peak > 50 * jp_peak
        assert jp_peak < 0.5  # the threshold-scaled peak stays bounded

    def test_plane_keypoint_coordinates(self):
        poses = builtin_scenario("plane_keypoints").goal_schedule.poses
        assert np.allclose(poses[1].position, [0.40, 0.80, 0.30])
        assert np.allclose(poses[3].position, [0.40, -0.80, 0.30])

    def test_sinusoid_parameters(self):
        s = builtin_scenario("sinusoid_gimbal")
        sched = s.goal_schedule
        assert np.allclose(sched.fixed.position, [0.432, 0.0, 1.105])
        assert sched.amplitude == pytest.approx(0.3)
        assert sched.axis == "y"
        assert s.gains.k_pos == 50.0
        assert s.gains.dt == pytest.approx(0.02)  # 50 Hz

    def test_reach_scenario_parameters(self):
        s = builtin_scenario("2r_reach_in")
        assert s.gains.k_pos == pytest.approx(0.1)
        assert s.gains.dt == pytest.approx(0.01)
        assert np.allclose(s.initial_q, [-math.pi / 4, math.pi / 4])
        goal = s.goal_schedule.pose
        assert np.allclose(goal.position[:2], 1.1 * math.sqrt(2) * np.ones(2))

    def test_line_keypoints_run_reaches_and_recovers(self):
        # A, B reachable; C unreachable (positive residual, singular region
        # entered); D recovers to zero error after exit
        log = run_scenario(builtin_scenario("line_keypoints"))
        seg = 1000  # 20 s dwell / 0.02 dt
        assert log.pos_err[seg - 1] < 1e-3        # A
        assert log.pos_err[2 * seg - 1] < 1e-3    # B
        assert log.pos_err[3 * seg - 1] > 0.05    # C residual
        assert log.inv_cond[2 * seg:3 * seg].min() < 0.1
        assert log.pos_err[4 * seg - 1] < 1e-3    # D


class TestSinusoidGimbalInvariant:
    def test_inverse_condition_crosses_gamma_twice_per_period(self):
        s = builtin_scenario("sinusoid_gimbal")
        log = run_scenario(s)
        per = int(round(s.goal_schedule.period / s.gains.dt))
        below = log.inv_cond < 0.1
        for p in range(3):
            seg = below[p * per:(p + 1) * per]
            entries = int(seg[0]) + int(((~seg[:-1]) & seg[1:]).sum())
            assert entries >= 2
        assert log.pos_err.max() < 2 * s.goal_schedule.amplitude
