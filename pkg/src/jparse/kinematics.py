"""Manipulator models, forward kinematics, geometric Jacobians, and pose error.

A model is an ordered chain of revolute/prismatic joints, each with a rigid
origin transform from its parent frame and a unit motion axis expressed in
its own frame (product-of-transforms kinematics).  The task space has
dimension m in {2, 3, 6}: m = 6 controls the full twist [vx vy vz wx wy wz],
m = 3 the planar rows [vx vy wz], and m = 2 the planar position [vx vy].
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import PoseSE3, RigidTransform, rotation_about, rotation_log

REVOLUTE = "revolute"
PRISMATIC = "prismatic"

# Rows of the full 6-row twist kept for each supported task dimension.
TASK_ROWS = {2: (0, 1), 3: (0, 1, 5), 6: (0, 1, 2, 3, 4, 5)}


class DimensionError(ValueError):
    """Joint-vector length does not match the model."""


@dataclass(frozen=True)
class Joint:
    kind: str
    axis: np.ndarray
    origin: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ValueError(f"unknown joint kind {self.kind!r}")
        a = np.asarray(self.axis, dtype=float).reshape(3).copy()
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("joint axis must have unit norm (tolerance 1e-12)")
        a.flags.writeable = False
        object.__setattr__(self, "axis", a)


@dataclass(frozen=True)
class ManipulatorModel:
    name: str
    joints: tuple[Joint, ...]
    end_effector_offset: RigidTransform = field(default_factory=RigidTransform.identity)
    task_dim: int = 6

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if self.task_dim not in TASK_ROWS:
            raise ValueError("task_dim must be one of 2, 3, 6")
        if self.task_dim > len(self.joints):
            warnings.warn(
                f"model {self.name!r}: task dimension {self.task_dim} exceeds "
                f"joint count {len(self.joints)} (over-constrained task)",
                stacklevel=2,
            )

    @property
    def dof(self) -> int:
        return len(self.joints)

    def check_q(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape[0] != self.dof:
            raise DimensionError(
                f"model {self.name!r} has {self.dof} joints, got q of length {q.shape[0]}"
            )
        return q


@dataclass(frozen=True)
class Twist:
    """Task-space velocity; length-m vector laid out per TASK_ROWS."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float).reshape(-1).copy()
        if not np.isfinite(v).all():
            raise ValueError("twist entries must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    @property
    def linear(self) -> np.ndarray:
        m = self.vector.shape[0]
        return self.vector[: 2 if m < 6 else 3]

    @property
    def angular(self) -> np.ndarray:
        m = self.vector.shape[0]
        return self.vector[2 if m < 6 else 3:]


@dataclass(frozen=True)
class TaskError:
    """Weighted pose error; same row layout as Twist."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float).reshape(-1).copy()
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _chain(model: ManipulatorModel, q: np.ndarray, want_jacobian: bool):
    """Single pass over the chain: end-effector frame (R, p) and, when asked,
    the world axis and origin of every joint for the Jacobian columns."""
    R = np.eye(3)
    p = np.zeros(3)
    frames = [] if want_jacobian else None
    for joint, qi in zip(model.joints, q):
        origin = joint.origin
        p = p + R @ origin.translation
        if origin.has_rotation:
            R = R @ origin.rotation
        if joint.kind == REVOLUTE:
            axis_w = R @ joint.axis
            if want_jacobian:
                frames.append((axis_w, p))
            R = R @ rotation_about(joint.axis, qi)
        else:
            axis_w = R @ joint.axis
            if want_jacobian:
                frames.append((axis_w, p))
            p = p + qi * axis_w
    eef = model.end_effector_offset
    p = p + R @ eef.translation
    if eef.has_rotation:
        R = R @ eef.rotation
    return R, p, frames


def fk_matrix(model: ManipulatorModel, q: np.ndarray) -> np.ndarray:
    """End-effector frame in the base frame as a 4x4 matrix."""
    R, p, _ = _chain(model, model.check_q(q), want_jacobian=False)
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = p
    return T


def forward_kinematics(model: ManipulatorModel, q: np.ndarray) -> PoseSE3:
    """End-effector pose in the base frame, orientation angle in [0, pi]."""
    R, p, _ = _chain(model, model.check_q(q), want_jacobian=False)
    axis, angle = rotation_log(R)
    return PoseSE3(position=p, axis=axis, angle=angle)


def fk_and_jacobian(model: ManipulatorModel, q: np.ndarray):
    """(R_ee, p_ee, J) computed in one chain traversal."""
    q = model.check_q(q)
    R, p_ee, frames = _chain(model, q, want_jacobian=True)
    J = np.zeros((6, model.dof))
    for i, (joint, (axis_w, origin_w)) in enumerate(zip(model.joints, frames)):
        if joint.kind == REVOLUTE:
            J[:3, i] = _cross(axis_w, p_ee - origin_w)
            J[3:, i] = axis_w
        else:
            J[:3, i] = axis_w
    return R, p_ee, J[list(TASK_ROWS[model.task_dim]), :]


def geometric_jacobian(model: ManipulatorModel, q: np.ndarray) -> np.ndarray:
    """m x n matrix J with t = J qdot, rows ordered [v; w] and truncated to m."""
    return fk_and_jacobian(model, q)[2]


def joint_world_positions(model: ManipulatorModel, q: np.ndarray) -> np.ndarray:
    """(n+1) x 3 array: each joint origin followed by the end-effector."""
    q = model.check_q(q)
    _, p_ee, frames = _chain(model, q, want_jacobian=True)
    return np.vstack([p for _, p in frames] + [p_ee])


def pose_error(
    desired: PoseSE3,
    current: PoseSE3,
    k_pos: float,
    k_ori: float,
    task_dim: int = 6,
) -> TaskError:
    """Weighted error [k_pos (x_des - x); k_ori * angle * axis] of the relative
    rotation R_des R^T, truncated to the task rows."""
    if k_pos <= 0.0 or k_ori <= 0.0:
        raise ValueError("k_pos and k_ori must be positive")
    e = np.zeros(6)
    e[:3] = k_pos * (desired.position - current.position)
    axis, angle = rotation_log(desired.rotation @ current.rotation.T)
    e[3:] = k_ori * angle * axis
    return TaskError(e[list(TASK_ROWS[task_dim])])


def relative_rotation_angle(a: PoseSE3, b: PoseSE3) -> float:
    return rotation_log(a.rotation @ b.rotation.T)[1]


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def _transform_from_dict(d: dict) -> RigidTransform:
    t = np.asarray(d.get("translation", [0.0, 0.0, 0.0]), dtype=float)
    R = np.eye(3)
    if "rotation_axis_angle" in d:
        ax, ay, az, theta = (float(v) for v in d["rotation_axis_angle"])
        axis = np.array([ax, ay, az])
        norm = np.linalg.norm(axis)
        if theta != 0.0:
            if abs(norm - 1.0) > 1e-9:
                raise ValueError("rotation_axis_angle axis must have unit norm")
            R = rotation_about(axis, theta)
    return RigidTransform(rotation=R, translation=t)


def _transform_to_dict(t: RigidTransform) -> dict:
    axis, angle = rotation_log(t.rotation)
    return {
        "translation": [float(v) for v in t.translation],
        "rotation_axis_angle": [float(axis[0]), float(axis[1]), float(axis[2]), float(angle)],
    }


def model_from_dict(doc: dict) -> ManipulatorModel:
    joints = tuple(
        Joint(
            kind=j["kind"],
            axis=np.asarray(j["axis"], dtype=float),
            origin=_transform_from_dict(j.get("origin", {})),
        )
        for j in doc["joints"]
    )
    return ManipulatorModel(
        name=doc.get("name", "unnamed"),
        joints=joints,
        end_effector_offset=_transform_from_dict(doc.get("end_effector_offset", {})),
        task_dim=int(doc.get("task_dim", 6)),
    )


def model_to_dict(model: ManipulatorModel) -> dict:
    return {
        "name": model.name,
        "task_dim": model.task_dim,
        "joints": [
            {
                "kind": j.kind,
                "axis": [float(v) for v in j.axis],
                "origin": _transform_to_dict(j.origin),
            }
            for j in model.joints
        ],
        "end_effector_offset": _transform_to_dict(model.end_effector_offset),
    }


def load_model(path: str) -> ManipulatorModel:
    with open(path, encoding="utf-8") as f:
        return model_from_dict(json.load(f))


def save_model(model: ManipulatorModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, indent=2)


def _dh_screw(axis: np.ndarray, angle: float, offset: float) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = rotation_about(axis, angle)
    T[:3, 3] = axis * offset
    return T


def model_from_dh(
    name: str,
    rows: list[dict],
    task_dim: int = 6,
    end_effector_offset: RigidTransform | None = None,
) -> ManipulatorModel:
    """Build a model from classic Denavit-Hartenberg rows.

    Each row is {"a": .., "alpha": .., "d": .., "theta": .., "kind": ..} and
    contributes Rz(theta) Tz(d) Tx(a) Rx(alpha); the joint variable adds to
    theta (revolute) or d (prismatic).  The fixed screws on either side of
    the joint variable fold into the origin of that joint and of the next.
    """
    z = np.array([0.0, 0.0, 1.0])
    x = np.array([1.0, 0.0, 0.0])
    joints = []
    carry = np.eye(4)
    for row in rows:
        kind = row.get("kind", REVOLUTE)
        a, alpha = float(row.get("a", 0.0)), float(row.get("alpha", 0.0))
        d, theta = float(row.get("d", 0.0)), float(row.get("theta", 0.0))
        if kind == REVOLUTE:
            # Rz(theta0 + q) Tz(d) ... = Rz(theta0) . Rz(q) . Tz(d) ...
            origin = carry @ _dh_screw(z, theta, 0.0)
            carry = _dh_screw(z, 0.0, d) @ _dh_screw(x, alpha, a)
        else:
            origin = carry @ _dh_screw(z, theta, d)
            carry = _dh_screw(x, alpha, a)
        joints.append(
            Joint(kind=kind, axis=z.copy(),
                  origin=RigidTransform(rotation=origin[:3, :3], translation=origin[:3, 3]))
        )
    if end_effector_offset is not None:
        carry = carry @ end_effector_offset.matrix()
    return ManipulatorModel(
        name=name,
        joints=tuple(joints),
        end_effector_offset=RigidTransform(rotation=carry[:3, :3], translation=carry[:3, 3]),
        task_dim=task_dim,
    )
