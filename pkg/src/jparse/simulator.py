"""Scenario definitions and the kinematic simulation loop.

A Scenario is fully serializable; run_scenario is deterministic for
identical inputs.  Goal schedules: a fixed pose, a keypoint list advanced
every dwell_s seconds of simulated time, or a sinusoidally moving target
published open loop (the goal advances with simulated time regardless of
tracking error).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .controller import ControllerGains, StepLog, step
from .geometry import PoseSE3
from .kinematics import ManipulatorModel, load_model
from .models import WRIST6_LOCK_Q, builtin_model, builtin_model_names
from .resolvers import (
    JParse,
    NullspaceObjective,
    ResolverConfig,
    config_from_dict,
    config_to_dict,
)

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class FixedGoal:
    pose: PoseSE3

    def pose_at(self, t: float) -> PoseSE3:
        return self.pose


@dataclass(frozen=True)
class KeypointList:
    poses: tuple[PoseSE3, ...]
    dwell_s: float

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if self.dwell_s <= 0.0:
            raise ValueError("dwell_s must be positive")
        if not self.poses:
            raise ValueError("keypoint list is empty")

    def pose_at(self, t: float) -> PoseSE3:
        i = min(int(t / self.dwell_s), len(self.poses) - 1)
        return self.poses[i]


@dataclass(frozen=True)
class SinusoidTrack:
    """One coordinate of the position sweeps amplitude*sin(2 pi t / period)
    around the fixed pose; orientation stays constant."""

    fixed: PoseSE3
    axis: str
    amplitude: float
    period: float

    def __post_init__(self):
        if self.axis not in AXIS_INDEX:
            raise ValueError("axis must be one of x, y, z")
        if self.amplitude <= 0.0 or self.period <= 0.0:
            raise ValueError("amplitude and period must be positive")

    def pose_at(self, t: float) -> PoseSE3:
        p = self.fixed.position.copy()
        p[AXIS_INDEX[self.axis]] += self.amplitude * math.sin(2.0 * math.pi * t / self.period)
        return PoseSE3(position=p, axis=self.fixed.axis, angle=self.fixed.angle)


GoalSchedule = Union[FixedGoal, KeypointList, SinusoidTrack]


@dataclass(frozen=True)
class NullspaceSpec:
    """Serializable form of the attract-to-zero nullspace objective."""

    k_n: float
    cap: float = 0.6

    def build(self) -> NullspaceObjective:
        return NullspaceObjective.attract_to_zero(self.k_n, self.cap)


@dataclass(frozen=True)
class Scenario:
    name: str
    model_ref: str                      # builtin name or JSON file path
    initial_q: tuple[float, ...]
    goal_schedule: GoalSchedule
    gains: ControllerGains
    resolver: ResolverConfig
    duration_s: float
    seed: int = 0
    nullspace: Optional[NullspaceSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "initial_q", tuple(float(v) for v in self.initial_q))
        if self.duration_s <= 0.0:
            raise ValueError("duration_s must be positive")

    def with_resolver(self, resolver: ResolverConfig) -> "Scenario":
        return Scenario(
            name=self.name, model_ref=self.model_ref, initial_q=self.initial_q,
            goal_schedule=self.goal_schedule, gains=self.gains, resolver=resolver,
            duration_s=self.duration_s, seed=self.seed, nullspace=self.nullspace,
        )

    def load_model(self) -> ManipulatorModel:
        if self.model_ref in builtin_model_names():
            return builtin_model(self.model_ref)
        return load_model(self.model_ref)


@dataclass
class TrajectoryLog:
    """Column-wise record of a simulated run; one row per control step."""

    t: np.ndarray
    q: np.ndarray
    q_dot: np.ndarray
    positions: np.ndarray
    axes: np.ndarray
    angles: np.ndarray
    pos_err: np.ndarray
    ori_err: np.ndarray
    twist_norm: np.ndarray
    sigma: np.ndarray
    inv_cond: np.ndarray
    lyapunov: np.ndarray
    flags: np.ndarray
    dt: float

    def __len__(self) -> int:
        return self.t.shape[0]


def run_scenario(scenario: Scenario) -> TrajectoryLog:
    model = scenario.load_model()
    gains = scenario.gains
    steps = int(round(scenario.duration_s / gains.dt))
    n = model.dof
    m = model.task_dim
    q = np.asarray(scenario.initial_q, dtype=float)
    nullspace = scenario.nullspace.build() if scenario.nullspace else None

    t_col = np.arange(steps) * gains.dt
    q_col = np.zeros((steps, n))
    qd_col = np.zeros((steps, n))
    pos_col = np.zeros((steps, 3))
    axis_col = np.zeros((steps, 3))
    ang_col = np.zeros(steps)
    perr_col = np.zeros(steps)
    oerr_col = np.zeros(steps)
    tw_col = np.zeros(steps)
    sig_col = np.zeros((steps, m))
    icn_col = np.zeros(steps)
    lyap_col = np.zeros(steps)
    flag_col = np.zeros((steps, m), dtype=bool)

    for i in range(steps):
        goal = scenario.goal_schedule.pose_at(float(t_col[i]))
        result = step(model, q, goal, gains, scenario.resolver, nullspace)
        log: StepLog = result.log
        q_col[i] = log.q
        qd_col[i] = log.q_dot
        pos_col[i] = log.pose.position
        axis_col[i] = log.pose.axis
        ang_col[i] = log.pose.angle
        perr_col[i] = log.pos_err
        oerr_col[i] = log.ori_err
        tw_col[i] = log.twist_norm
        sig_col[i] = log.sigma
        icn_col[i] = log.inv_cond
        lyap_col[i] = log.lyapunov
        flag_col[i] = log.flags
        q = result.q_next

    return TrajectoryLog(
        t=t_col, q=q_col, q_dot=qd_col, positions=pos_col, axes=axis_col,
        angles=ang_col, pos_err=perr_col, ori_err=oerr_col, twist_norm=tw_col,
        sigma=sig_col, inv_cond=icn_col, lyapunov=lyap_col, flags=flag_col,
        dt=gains.dt,
    )


@dataclass(frozen=True)
class SummaryStats:
    peak_joint_speed: float
    peak_joint_accel: float
    peak_joint_jerk: float
    peak_speed_per_joint: tuple[float, ...]
    steady_state_pos_err: float
    steady_state_ori_err: float
    min_inverse_condition_number: float
    lyapunov_increase_events: int
    max_sigma_max_step: float

    def to_dict(self) -> dict:
        return {
            "peak_joint_speed": self.peak_joint_speed,
            "peak_joint_accel": self.peak_joint_accel,
            "peak_joint_jerk": self.peak_joint_jerk,
            "peak_speed_per_joint": list(self.peak_speed_per_joint),
            "steady_state_pos_err": self.steady_state_pos_err,
            "steady_state_ori_err": self.steady_state_ori_err,
            "min_inverse_condition_number": self.min_inverse_condition_number,
            "lyapunov_increase_events": self.lyapunov_increase_events,
            "max_sigma_max_step": self.max_sigma_max_step,
        }


def summarize(log: TrajectoryLog, lyapunov_tol: float = 1e-9) -> SummaryStats:
    """Peak |qdot|, |qddot| and jerk by finite differencing the logged joint
    velocities, steady-state errors over the final 10% of rows, the count of
    steps where the Lyapunov value rose by more than lyapunov_tol, and the
    largest per-step jump of sigma_max (sharp drops can flip the sign of the
    acceleration along singular directions, so they are worth surfacing)."""
    if len(log) < 3:
        raise ValueError("log too short to summarize (need >= 3 rows)")
    qd = log.q_dot
    accel = np.diff(qd, axis=0) / log.dt
    jerk = np.diff(qd, n=2, axis=0) / log.dt**2
    tail = max(1, len(log) // 10)
    dV = np.diff(log.lyapunov)
    return SummaryStats(
        peak_joint_speed=float(np.abs(qd).max()),
        peak_joint_accel=float(np.abs(accel).max()),
        peak_joint_jerk=float(np.abs(jerk).max()),
        peak_speed_per_joint=tuple(float(v) for v in np.abs(qd).max(axis=0)),
        steady_state_pos_err=float(log.pos_err[-tail:].mean()),
        steady_state_ori_err=float(log.ori_err[-tail:].mean()),
        min_inverse_condition_number=float(log.inv_cond.min()),
        lyapunov_increase_events=int((dV > lyapunov_tol).sum()),
        max_sigma_max_step=float(np.abs(np.diff(log.sigma[:, 0])).max()),
    )


# ---------------------------------------------------------------------------
# CSV / JSON serialization
# ---------------------------------------------------------------------------

def csv_header(n_joints: int, m: int) -> str:
    cols = (
        ["t"]
        + [f"q{i}" for i in range(n_joints)]
        + [f"qd{i}" for i in range(n_joints)]
        + ["px", "py", "pz", "ax", "ay", "az", "theta", "pos_err", "ori_err"]
        + [f"sig{i}" for i in range(m)]
        + ["inv_cond", "lyap", "flags"]
    )
    return ",".join(cols)


def log_to_csv(log: TrajectoryLog) -> str:
    n = log.q.shape[1]
    m = log.sigma.shape[1]
    lines = [csv_header(n, m)]
    for i in range(len(log)):
        flags = "".join("1" if f else "0" for f in log.flags[i])
        row = (
            [f"{log.t[i]:.6f}"]
            + [f"{v:.12g}" for v in log.q[i]]
            + [f"{v:.12g}" for v in log.q_dot[i]]
            + [f"{v:.12g}" for v in log.positions[i]]
            + [f"{v:.12g}" for v in log.axes[i]]
            + [f"{log.angles[i]:.12g}", f"{log.pos_err[i]:.12g}", f"{log.ori_err[i]:.12g}"]
            + [f"{v:.12g}" for v in log.sigma[i]]
            + [f"{log.inv_cond[i]:.12g}", f"{log.lyapunov[i]:.12g}", flags]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _pose_to_dict(pose: PoseSE3) -> dict:
    return {
        "position": [float(v) for v in pose.position],
        "axis": [float(v) for v in pose.axis],
        "angle": float(pose.angle),
    }


def _pose_from_dict(d: dict) -> PoseSE3:
    return PoseSE3(
        position=np.asarray(d["position"], dtype=float),
        axis=np.asarray(d.get("axis", [1.0, 0.0, 0.0]), dtype=float),
        angle=float(d.get("angle", 0.0)),
    )


def _schedule_to_dict(schedule: GoalSchedule) -> dict:
    if isinstance(schedule, FixedGoal):
        return {"type": "fixed", "pose": _pose_to_dict(schedule.pose)}
    if isinstance(schedule, KeypointList):
        return {
            "type": "keypoints",
            "poses": [_pose_to_dict(p) for p in schedule.poses],
            "dwell_s": schedule.dwell_s,
        }
    if isinstance(schedule, SinusoidTrack):
        return {
            "type": "sinusoid",
            "fixed": _pose_to_dict(schedule.fixed),
            "axis": schedule.axis,
            "amplitude": schedule.amplitude,
            "period": schedule.period,
        }
    raise TypeError(f"not a goal schedule: {schedule!r}")


def _schedule_from_dict(d: dict) -> GoalSchedule:
    kind = d.get("type")
    if kind == "fixed":
        return FixedGoal(pose=_pose_from_dict(d["pose"]))
    if kind == "keypoints":
        return KeypointList(
            poses=tuple(_pose_from_dict(p) for p in d["poses"]),
            dwell_s=float(d["dwell_s"]),
        )
    if kind == "sinusoid":
        return SinusoidTrack(
            fixed=_pose_from_dict(d["fixed"]),
            axis=d["axis"],
            amplitude=float(d["amplitude"]),
            period=float(d["period"]),
        )
    raise ValueError(f"unknown goal schedule type {kind!r}")


def scenario_to_dict(s: Scenario) -> dict:
    doc = {
        "name": s.name,
        "model": s.model_ref,
        "initial_q": list(s.initial_q),
        "goal": _schedule_to_dict(s.goal_schedule),
        "gains": {
            "K": [float(v) for v in s.gains.K],
            "dt": s.gains.dt,
            "twist_cap": s.gains.twist_cap,
        },
        "resolver": config_to_dict(s.resolver),
        "duration_s": s.duration_s,
        "seed": s.seed,
    }
    if s.nullspace is not None:
        doc["nullspace"] = {"k_n": s.nullspace.k_n, "cap": s.nullspace.cap}
    return doc


def scenario_from_dict(doc: dict) -> Scenario:
    g = doc["gains"]
    nullspace = None
    if "nullspace" in doc and doc["nullspace"] is not None:
        ns = doc["nullspace"]
        nullspace = NullspaceSpec(k_n=float(ns["k_n"]), cap=float(ns.get("cap", 0.6)))
    return Scenario(
        name=doc.get("name", "unnamed"),
        model_ref=doc["model"],
        initial_q=tuple(float(v) for v in doc["initial_q"]),
        goal_schedule=_schedule_from_dict(doc["goal"]),
        gains=ControllerGains(
            K=np.asarray(g["K"], dtype=float),
            dt=float(g["dt"]),
            twist_cap=float(g.get("twist_cap", 0.0)),
        ),
        resolver=config_from_dict(doc["resolver"]),
        duration_s=float(doc["duration_s"]),
        seed=int(doc.get("seed", 0)),
        nullspace=nullspace,
    )


def scenario_to_json(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2)


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_dict(json.loads(text))


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as f:
        return scenario_from_json(f.read())


# ---------------------------------------------------------------------------
# Builtin scenarios
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)

# Keypoints share one constant orientation (tool z pointing along +x, i.e. a
# quarter turn about y), which the spatial7 home pose below already matches.
_KEYPOINT_AXIS = np.array([0.0, 1.0, 0.0])
_KEYPOINT_ANGLE = math.pi / 2
_SPATIAL7_HOME = (0.0, 0.6, 0.0, 1.2, 0.0, -0.23, 0.0)

LINE_KEYPOINTS = ((1.0, 0.0, 0.5), (0.5, 0.0, 0.5), (0.0, 0.0, 0.5), (0.5, 0.0, 0.5))
PLANE_KEYPOINTS = ((0.55, 0.0, 0.30), (0.40, 0.80, 0.30), (0.25, 0.0, 0.30), (0.40, -0.80, 0.30))

# Labels recomputed for the synthetic spatial7 arm, not copied from any other
# robot: line C sits inside the inner workspace void (see models.spatial7).
LINE_UNREACHABLE = (False, False, True, False)
KEYPOINT_DWELL_S = 20.0


def _keypoint_pose(xyz) -> PoseSE3:
    return PoseSE3(position=np.asarray(xyz, float), axis=_KEYPOINT_AXIS, angle=_KEYPOINT_ANGLE)


def builtin_scenarios() -> dict[str, Scenario]:
    """Named scenarios mirroring the benchmark experiments."""
    scenarios = {}

    scenarios["2r_reach_in"] = Scenario(
        name="2r_reach_in",
        model_ref="planar2r",
        initial_q=(-math.pi / 4, math.pi / 4),
        goal_schedule=FixedGoal(PoseSE3.from_position(1.1 * _SQRT2, 1.1 * _SQRT2, 0.0)),
        gains=ControllerGains.uniform(m=2, k_pos=0.1, dt=0.01),
        resolver=JParse(gamma=0.1),
        duration_s=50.0,
    )

    scenarios["2r_reach_out"] = Scenario(
        name="2r_reach_out",
        model_ref="planar2r",
        initial_q=(math.pi / 4, 1e-10),
        goal_schedule=FixedGoal(PoseSE3.from_position(0.5 * _SQRT2, 0.5 * _SQRT2, 0.0)),
        gains=ControllerGains.uniform(m=2, k_pos=0.1, dt=0.01),
        resolver=JParse(gamma=0.1),
        duration_s=120.0,
    )

    keypoint_gains = ControllerGains.uniform(m=6, k_pos=10.0, k_ori=10.0, dt=0.02, twist_cap=1.0)
    scenarios["line_keypoints"] = Scenario(
        name="line_keypoints",
        model_ref="spatial7",
        initial_q=_SPATIAL7_HOME,
        goal_schedule=KeypointList(
            poses=tuple(_keypoint_pose(p) for p in LINE_KEYPOINTS),
            dwell_s=KEYPOINT_DWELL_S,
        ),
        gains=keypoint_gains,
        resolver=JParse(gamma=0.1),
        duration_s=KEYPOINT_DWELL_S * len(LINE_KEYPOINTS),
        nullspace=NullspaceSpec(k_n=2.0, cap=0.6),
    )

    scenarios["plane_keypoints"] = Scenario(
        name="plane_keypoints",
        model_ref="spatial7",
        initial_q=_SPATIAL7_HOME,
        goal_schedule=KeypointList(
            poses=tuple(_keypoint_pose(p) for p in PLANE_KEYPOINTS),
            dwell_s=KEYPOINT_DWELL_S,
        ),
        gains=keypoint_gains,
        resolver=JParse(gamma=0.1),
        duration_s=KEYPOINT_DWELL_S * len(PLANE_KEYPOINTS),
        nullspace=NullspaceSpec(k_n=2.0, cap=0.6),
    )

    scenarios["sinusoid_gimbal"] = Scenario(
        name="sinusoid_gimbal",
        model_ref="wrist6",
        initial_q=WRIST6_LOCK_Q,
        goal_schedule=SinusoidTrack(
            fixed=PoseSE3(position=np.array([0.432, 0.0, 1.105]),
                          axis=_KEYPOINT_AXIS, angle=_KEYPOINT_ANGLE),
            axis="y",
            amplitude=0.3,
            period=10.0,
        ),
        gains=ControllerGains.uniform(m=6, k_pos=50.0, k_ori=50.0, dt=0.02),
        resolver=JParse(gamma=0.1),
        duration_s=30.0,
    )

    return scenarios


def builtin_scenario(name: str) -> Scenario:
    scenarios = builtin_scenarios()
    try:
        return scenarios[name]
    except KeyError:
        raise KeyError(
            f"unknown builtin scenario {name!r}; available: {sorted(scenarios)}"
        ) from None
