"""Discrete-time proportional task-space velocity controller.

One step: pose -> raw geometric error -> element-wise gain -> optional norm
cap -> resolver -> explicit Euler update of q.  The quadratic form
V = 0.5 e^T K^-1 e of the weighted error is logged every step for stability
monitoring; the controller never intervenes on a V increase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import PoseSE3, rotation_log
from .kinematics import (
    TASK_ROWS,
    ManipulatorModel,
    TaskError,
    Twist,
    fk_and_jacobian,
)
from .resolvers import (
    JParse,
    NullspaceObjective,
    ResolverConfig,
    resolve,
    singularity_metrics,
    svd,
)

# Flags logged for non-jparse resolvers use this threshold (diagnostic only).
DEFAULT_FLAG_GAMMA = 0.1


@dataclass(frozen=True)
class ControllerGains:
    """Per-axis proportional gains (1/s), step size, and twist norm cap."""

    K: np.ndarray
    dt: float
    twist_cap: float = 0.0  # 0 disables the cap

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float).reshape(-1).copy()
        if (K <= 0.0).any():
            raise ValueError("all gains must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.twist_cap < 0.0:
            raise ValueError("twist_cap must be >= 0")
        K.flags.writeable = False
        object.__setattr__(self, "K", K)

    @classmethod
    def uniform(cls, m: int, k_pos: float, k_ori: Optional[float] = None,
                dt: float = 0.01, twist_cap: float = 0.0) -> "ControllerGains":
        """Position gain on the linear rows, orientation gain on the angular
        rows (m = 2 has none; m = 3 has one)."""
        if k_ori is None:
            k_ori = k_pos
        n_lin = 2 if m < 6 else 3
        K = np.array([k_pos] * n_lin + [k_ori] * (m - n_lin))
        return cls(K=K, dt=dt, twist_cap=twist_cap)

    @property
    def m(self) -> int:
        return self.K.shape[0]

    @property
    def k_pos(self) -> float:
        return float(self.K[0])

    @property
    def k_ori(self) -> float:
        return float(self.K[-1]) if self.m > 2 else float(self.K[0])

    @property
    def k_max(self) -> float:
        return float(self.K.max())

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.K == self.K[0]))


def command_twist(error: TaskError, gains: ControllerGains) -> Twist:
    """t = K * e element-wise, rescaled to ||t|| <= twist_cap (direction kept)."""
    t = gains.K * error.vector
    if gains.twist_cap > 0.0:
        norm = math.sqrt(float(t @ t))
        if norm > gains.twist_cap:
            t = t * (gains.twist_cap / norm)
    return Twist(t)


def lyapunov_value(error: TaskError, gains: ControllerGains) -> float:
    """V = 0.5 e^T K^-1 e of the weighted error; zero iff the error is zero."""
    e = error.vector
    return float(0.5 * e @ (e / gains.K))


@dataclass(frozen=True)
class StabilityReport:
    k_dt: float
    passes_simple: bool             # k dt <= 2
    passes_conservative: bool       # k dt <= 2 / (m (m - 1) + 1)
    conservative_bound: float
    theta_psd: Optional[bool] = None
    theta_min_eigenvalue: Optional[float] = None


def conservative_gain_bound(m: int, dt: float) -> float:
    """Largest uniform gain passing the diagonal-dominance condition."""
    return 2.0 / ((m * (m - 1) + 1) * dt)


def theta_matrix(Q_diag: np.ndarray, U: np.ndarray, K: np.ndarray, dt: float) -> np.ndarray:
    """Theta = Q - (dt/2) Q U^T K U Q; positive semi-definite iff the discrete
    step cannot increase V (to first order)."""
    Q = np.diag(np.asarray(Q_diag, dtype=float))
    return Q - 0.5 * dt * Q @ U.T @ np.diag(np.asarray(K, dtype=float)) @ U @ Q


def stability_report(
    gains: ControllerGains,
    m: int,
    U: Optional[np.ndarray] = None,
    Q_diag: Optional[np.ndarray] = None,
) -> StabilityReport:
    if m < 1:
        raise ValueError("m must be >= 1")
    k_dt = gains.k_max * gains.dt
    conservative = 2.0 / (m * (m - 1) + 1)
    theta_psd = None
    theta_min = None
    if U is not None and Q_diag is not None:
        eigs = np.linalg.eigvalsh(theta_matrix(Q_diag, U, gains.K, gains.dt))
        theta_min = float(eigs.min())
        theta_psd = bool(theta_min >= -1e-10)
    return StabilityReport(
        k_dt=k_dt,
        passes_simple=bool(k_dt <= 2.0),
        passes_conservative=bool(k_dt <= conservative),
        conservative_bound=conservative,
        theta_psd=theta_psd,
        theta_min_eigenvalue=theta_min,
    )


def stability_q_diagonal(sigma: np.ndarray, gamma: float, a: float = 0.0) -> np.ndarray:
    """Q_i = sigma_i * S'_i: 1 in healthy directions, (sigma_i / gamma
    sigma_max)^2 (shaped) in singular ones; always in [0, 1]."""
    from .resolvers import jparse_inverse_profile

    sigma = np.asarray(sigma, dtype=float)
    return sigma * jparse_inverse_profile(sigma, gamma, a)


@dataclass(frozen=True)
class StepLog:
    """Observables of one controller step, taken at the pre-step state."""

    q: np.ndarray
    q_dot: np.ndarray
    pose: PoseSE3
    pos_err: float
    ori_err: float
    twist_norm: float
    sigma: np.ndarray
    inv_cond: float
    lyapunov: float
    flags: np.ndarray


@dataclass(frozen=True)
class StepResult:
    q_next: np.ndarray
    log: StepLog


def step(
    model: ManipulatorModel,
    q: np.ndarray,
    goal: PoseSE3,
    gains: ControllerGains,
    cfg: ResolverConfig,
    nullspace: Optional[NullspaceObjective] = None,
) -> StepResult:
    """One explicit-Euler step q_next = q + dt * resolve(J, K e capped)."""
    q = model.check_q(q)
    m = model.task_dim
    if gains.m != m:
        raise ValueError(f"gains have {gains.m} axes but the task dimension is {m}")
    R_ee, p_ee, J = fk_and_jacobian(model, q)
    ee_axis, ee_angle = rotation_log(R_ee)
    pose = PoseSE3(position=p_ee, axis=ee_axis, angle=ee_angle)
    rel_axis, rel_angle = rotation_log(goal.rotation @ R_ee.T)
    e6 = np.empty(6)
    e6[:3] = goal.position - p_ee
    e6[3:] = rel_angle * rel_axis
    err = TaskError(e6[list(TASK_ROWS[m])])
    weighted = TaskError(gains.K * err.vector)
    twist = command_twist(err, gains)
    factors = svd(J)
    gamma = cfg.gamma if isinstance(cfg, JParse) else DEFAULT_FLAG_GAMMA
    metrics = singularity_metrics(factors, gamma)
    q_dot = resolve(J, twist.vector, cfg, nullspace, q, factors=factors)
    log = StepLog(
        q=q.copy(),
        q_dot=q_dot,
        pose=pose,
        pos_err=math.sqrt(float(e6[:3] @ e6[:3])),
        ori_err=rel_angle,
        twist_norm=math.sqrt(float(twist.vector @ twist.vector)),
        sigma=factors.sigma,
        inv_cond=metrics.inverse_condition_number,
        lyapunov=lyapunov_value(weighted, gains),
        flags=metrics.singular_flags,
    )
    return StepResult(q_next=q + gains.dt * q_dot, log=log)
