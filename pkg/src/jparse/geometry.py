"""SO(3)/SE(3) helpers: axis-angle rotations, matrix exp/log, rigid transforms.

Rotations are carried as (unit axis, angle) pairs with the angle normalized
to [0, pi]; the antipodal representative (-axis, 2*pi - angle) is never
produced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Below this angle the log map switches to its first-order form; within the
# same distance of pi it switches to symmetric-part extraction.
_SMALL_ANGLE = 1e-4


def hat(w: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(w) @ v == cross(w, v)."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(W: np.ndarray) -> np.ndarray:
    """Inverse of hat for a skew-symmetric matrix (averages the two triangles)."""
    return 0.5 * np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]])


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues formula for a unit axis; exact for any angle including zero."""
    x, y, z = axis
    c = np.cos(angle)
    s = np.sin(angle)
    C = 1.0 - c
    return np.array([
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
    ])


def _pi_axis(R: np.ndarray) -> np.ndarray:
    # Near angle pi, R + I ~ 2 a a^T; the best-conditioned column recovers a.
    B = 0.5 * (R + np.eye(3))
    j = int(np.argmax(np.diag(B)))
    a = B[:, j] / np.sqrt(max(B[j, j], 1e-300))
    return a / np.linalg.norm(a)


def rotation_log(R: np.ndarray) -> tuple[np.ndarray, float]:
    """Axis-angle of a rotation matrix with angle in [0, pi].

    At exactly pi the axis sign is ambiguous; the tie-break makes the first
    nonzero axis component positive so repeated calls agree.
    """
    w = vee(R)                # sin(angle) * axis (vee averages the triangles)
    s = float(np.linalg.norm(w))
    c = float(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0))
    angle = float(np.arctan2(s, c))

    if angle < _SMALL_ANGLE:
        if s == 0.0:
            return np.array([1.0, 0.0, 0.0]), 0.0
        return w / s, angle

    if angle > np.pi - _SMALL_ANGLE:
        axis = _pi_axis(R)
        if s > 1e-12:
            # Angle is below pi: the skew part still fixes the sign.
            if float(axis @ w) < 0.0:
                axis = -axis
        else:
            nz = np.nonzero(np.abs(axis) > 1e-12)[0]
            if nz.size and axis[nz[0]] < 0.0:
                axis = -axis
        return axis, angle

    return w / s, angle


@dataclass(frozen=True)
class PoseSE3:
    """Position plus axis-angle orientation of a frame in the base frame."""

    position: np.ndarray
    axis: np.ndarray
    angle: float

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3).copy()
        a = np.asarray(self.axis, dtype=float).reshape(3).copy()
        angle = float(self.angle) % (2.0 * np.pi)
        if angle > np.pi:
            angle = 2.0 * np.pi - angle
            a = -a
        if angle == 0.0:
            if not np.isfinite(a).all() or np.linalg.norm(a) == 0.0:
                a = np.array([1.0, 0.0, 0.0])
        n = np.linalg.norm(a)
        if abs(n - 1.0) > 1e-9:
            if n == 0.0:
                raise ValueError("orientation axis must be a unit vector")
            a = a / n
        p.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "axis", a)
        object.__setattr__(self, "angle", angle)

    @property
    def rotation(self) -> np.ndarray:
        cached = self.__dict__.get("_rotation")
        if cached is None:
            cached = rotation_about(self.axis, self.angle)
            cached.flags.writeable = False
            object.__setattr__(self, "_rotation", cached)
        return cached

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "PoseSE3":
        axis, angle = rotation_log(np.asarray(T, dtype=float)[:3, :3])
        return cls(position=np.asarray(T, dtype=float)[:3, 3], axis=axis, angle=angle)

    @classmethod
    def from_position(cls, x, y, z) -> "PoseSE3":
        return cls(position=np.array([x, y, z], float), axis=np.array([1.0, 0, 0]), angle=0.0)

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T

    def rotation_vector(self) -> np.ndarray:
        return self.angle * self.axis


@dataclass(frozen=True)
class RigidTransform:
    """Fixed rotation + translation, used for joint origins and tool offsets."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3).copy()
        p = np.asarray(self.translation, dtype=float).reshape(3).copy()
        if np.linalg.norm(R @ R.T - np.eye(3)) > 1e-9:
            raise ValueError("rotation part is not orthogonal")
        R.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", p)
        object.__setattr__(self, "has_rotation", bool(np.any(R != np.eye(3))))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_translation(cls, x, y, z) -> "RigidTransform":
        return cls(translation=np.array([x, y, z], float))

    @classmethod
    def from_axis_angle(cls, axis, angle, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        a = np.asarray(axis, dtype=float)
        a = a / np.linalg.norm(a)
        return cls(rotation=rotation_about(a, float(angle)),
                   translation=np.asarray(translation, dtype=float))

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T
