"""Builtin manipulator models used by the benchmark scenarios and tests.

Spatial keypoint and tracking scenarios run on documented synthetic arms;
real robot parameter files can be supplied instead through the JSON model
loader (see kinematics.load_model).
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import RigidTransform
from .kinematics import Joint, ManipulatorModel, PRISMATIC, REVOLUTE

_Z = np.array([0.0, 0.0, 1.0])
_Y = np.array([0.0, 1.0, 0.0])

# wrist6 geometry: shoulder height is chosen so that the gimbal-lock
# configuration (forearm horizontal, wrist straight) places the end-effector
# exactly on the builtin sinusoid path point (x=0.432, z=1.105) at y=0.
WRIST6_UPPER_ARM = 0.5
WRIST6_FOREARM = 0.5
WRIST6_TOOL = 0.1
WRIST6_LOCK_ELBOW_X = 0.432 - WRIST6_FOREARM - WRIST6_TOOL     # -0.168
WRIST6_SHOULDER_HEIGHT = 1.105 - math.sqrt(
    WRIST6_UPPER_ARM**2 - WRIST6_LOCK_ELBOW_X**2
)

# Joint angles of that lock configuration (q5 = 0 aligns the two wrist rolls).
WRIST6_LOCK_Q2 = math.asin(WRIST6_LOCK_ELBOW_X / WRIST6_UPPER_ARM)
WRIST6_LOCK_Q = (0.0, WRIST6_LOCK_Q2, math.pi / 2 - WRIST6_LOCK_Q2, 0.0, 0.0, 0.0)


def planar_arm(name: str, link_lengths, task_dim: int = 2) -> ManipulatorModel:
    """Planar chain of revolute z joints in the xy plane."""
    joints = [Joint(REVOLUTE, _Z)]
    for l in link_lengths[:-1]:
        joints.append(Joint(REVOLUTE, _Z, RigidTransform.from_translation(l, 0, 0)))
    return ManipulatorModel(
        name=name,
        joints=tuple(joints),
        end_effector_offset=RigidTransform.from_translation(link_lengths[-1], 0, 0),
        task_dim=task_dim,
    )


def planar2r() -> ManipulatorModel:
    return planar_arm("planar2r", [1.0, 1.0])


def planar3r() -> ManipulatorModel:
    return planar_arm("planar3r", [1.0, 1.0, 1.0])


def spatial7() -> ManipulatorModel:
    """Redundant 7-R arm (m = 6) with an unequal upper-arm/forearm split.

    The upper arm (0.75 m) is longer than everything distal of the elbow
    (0.45 m), so the end-effector cannot come within 0.30 m of the shoulder
    at (0, 0, 0.30): the line-keypoint C = (0, 0, 0.5) sits inside that void
    while A = (1, 0, 0.5) is within the 1.20 m outer reach.
    """
    return ManipulatorModel(
        name="spatial7",
        joints=(
            Joint(REVOLUTE, _Z, RigidTransform.from_translation(0, 0, 0.15)),
            Joint(REVOLUTE, _Y, RigidTransform.from_translation(0, 0, 0.15)),
            Joint(REVOLUTE, _Z, RigidTransform.from_translation(0, 0, 0.40)),
            Joint(REVOLUTE, _Y, RigidTransform.from_translation(0, 0, 0.35)),
            Joint(REVOLUTE, _Z, RigidTransform.from_translation(0, 0, 0.25)),
            Joint(REVOLUTE, _Y, RigidTransform.from_translation(0, 0, 0.10)),
            Joint(REVOLUTE, _Z, RigidTransform.from_translation(0, 0, 0.05)),
        ),
        end_effector_offset=RigidTransform.from_translation(0, 0, 0.05),
        task_dim=6,
    )


def wrist6() -> ManipulatorModel:
    """Non-redundant 6-R arm with a wrist-partitioned (z-y-z) spherical wrist.

    Aligning the two wrist rolls (q5 = 0) is the gimbal-lock singularity; see
    WRIST6_LOCK_Q for the configuration where it happens on the builtin
    tracking path.
    """
    return ManipulatorModel(
        name="wrist6",
        joints=(
            Joint(REVOLUTE, _Z, RigidTransform.from_translation(0, 0, WRIST6_SHOULDER_HEIGHT)),
            Joint(REVOLUTE, _Y),
            Joint(REVOLUTE, _Y, RigidTransform.from_translation(0, 0, WRIST6_UPPER_ARM)),
            Joint(REVOLUTE, _Z, RigidTransform.from_translation(0, 0, WRIST6_FOREARM)),
            Joint(REVOLUTE, _Y),
            Joint(REVOLUTE, _Z),
        ),
        end_effector_offset=RigidTransform.from_translation(0, 0, WRIST6_TOOL),
        task_dim=6,
    )


def prismatic_xyz() -> ManipulatorModel:
    """Three orthogonal prismatic joints; constant Jacobian, used in tests."""
    return ManipulatorModel(
        name="prismatic_xyz",
        joints=(
            Joint(PRISMATIC, np.array([1.0, 0.0, 0.0])),
            Joint(PRISMATIC, np.array([0.0, 1.0, 0.0])),
            Joint(PRISMATIC, _Z),
        ),
        task_dim=6,
    )


_BUILTIN = {
    "planar2r": planar2r,
    "planar3r": planar3r,
    "spatial7": spatial7,
    "wrist6": wrist6,
    "prismatic_xyz": prismatic_xyz,
}


def builtin_model(name: str) -> ManipulatorModel:
    try:
        return _BUILTIN[name]()
    except KeyError:
        raise KeyError(
            f"unknown builtin model {name!r}; available: {sorted(_BUILTIN)}"
        ) from None


def builtin_model_names() -> list[str]:
    return sorted(_BUILTIN)
