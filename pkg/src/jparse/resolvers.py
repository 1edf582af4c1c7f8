"""Twist-to-joint-velocity resolvers.

All resolvers share the same skeleton qdot = V S' U^T t, where U, sigma, V
come from the SVD of the geometric Jacobian and the diagonal profile S'
(inverse singular values) characterizes the algorithm:

  pinv    S'_i = 1/sigma_i                  (0 where sigma_i = 0)
  dls     S'_i = sigma_i / (sigma_i^2 + lambda^2)
  adls    dls with lambda = lambda0 * max(0, 1 - w/w0), w = prod(sigma)
  edls    S'_i = (1 - beta^x) / sigma_i, x = (sigma_i - sig-) / (sig+ - sig-),
          clamped to 1/sigma_i above sig+ and 0 below sig-
  jparse  S'_i = S_i / max(sigma_i, gamma sigma_max), with the gain S_i = 1
          for healthy directions and a shaped ramp S_i(xi), xi =
          sigma_i / (gamma sigma_max), for directions flagged as singular

The jparse profile floors every singular value at a fraction gamma of the
largest one (the "safety" spectrum), splits the commanded twist between
healthy and singular directions, and scales the singular share down by the
ratio xi, so requested motion vanishes smoothly as mobility is lost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np


class DegenerateJacobianError(ValueError):
    """The Jacobian is identically zero; a physical serial arm never produces
    this, so it indicates a modeling bug upstream."""


# ---------------------------------------------------------------------------
# SVD and singularity metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SvdFactors:
    """Full SVD of an m x n Jacobian; sigma is descending, length m."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def sigma_max(self) -> float:
        return float(self.sigma[0])

    def reconstruct(self) -> np.ndarray:
        S = np.zeros((self.m, self.n))
        k = min(self.m, self.n)
        S[:k, :k] = np.diag(self.sigma[:k])
        return self.U @ S @ self.V.T


def svd(J: np.ndarray) -> SvdFactors:
    J = np.asarray(J, dtype=float)
    if not np.isfinite(J).all():
        raise ValueError("Jacobian has non-finite entries")
    U, s, Vh = np.linalg.svd(J, full_matrices=True)
    m = J.shape[0]
    sigma = np.zeros(m)
    sigma[: s.shape[0]] = s
    return SvdFactors(U=U, sigma=sigma, V=Vh.T)


@dataclass(frozen=True)
class SingularityMetrics:
    manipulability: float
    inverse_condition_number: float
    singular_flags: np.ndarray  # m booleans, sigma_i < gamma * sigma_max


def singular_flags(sigma: np.ndarray, gamma: float) -> np.ndarray:
    """Strictly below the threshold: sigma_i == gamma * sigma_max is healthy."""
    sigma = np.asarray(sigma, dtype=float)
    return sigma < gamma * float(np.max(sigma, initial=0.0))


def singularity_metrics(factors: SvdFactors, gamma: float) -> SingularityMetrics:
    sigma = factors.sigma
    smax = factors.sigma_max
    return SingularityMetrics(
        manipulability=float(np.prod(sigma)),
        inverse_condition_number=float(sigma[-1] / smax) if smax > 0.0 else 0.0,
        singular_flags=singular_flags(sigma, gamma),
    )


def gamma_lower_bound(v_max: float, qdot_max: float, sigma_max_floor: float) -> float:
    """Smallest gamma keeping ||qdot|| <= qdot_max for requests up to v_max,
    given a configuration-independent lower bound on sigma_max.

    For a planar all-revolute arm the floor is the last link length; for a
    spatial all-revolute arm with m = 6 it is 1.
    """
    if min(v_max, qdot_max, sigma_max_floor) <= 0.0:
        raise ValueError("all inputs must be positive")
    bound = v_max / (sigma_max_floor * qdot_max)
    if bound > 1.0:
        raise ValueError(
            f"gamma lower bound {bound:.4g} exceeds 1: the speed cap "
            f"{qdot_max} is infeasible at sigma_max floor {sigma_max_floor}"
        )
    return bound


# ---------------------------------------------------------------------------
# jparse constructions
# ---------------------------------------------------------------------------

def safety_sigma(sigma: np.ndarray, gamma: float) -> np.ndarray:
    """Spectrum with every value below gamma*sigma_max floored to it."""
    sigma = np.asarray(sigma, dtype=float)
    smax = float(np.max(sigma, initial=0.0))
    if smax == 0.0:
        raise DegenerateJacobianError("all singular values are zero")
    return np.maximum(sigma, gamma * smax)


def projection_basis(U: np.ndarray, flags: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split U into healthy columns U_p and singular columns U_tilde."""
    flags = np.asarray(flags, dtype=bool)
    return U[:, ~flags], U[:, flags]


def phi_matrix(sigma: np.ndarray, gamma: float, flags: np.ndarray) -> np.ndarray:
    """k x k diagonal of ratios sigma*_i / (gamma sigma_max) for flagged i."""
    sigma = np.asarray(sigma, dtype=float)
    flags = np.asarray(flags, dtype=bool)
    b = gamma * float(np.max(sigma, initial=0.0))
    return np.diag(sigma[flags] / b) if flags.any() else np.zeros((0, 0))


def shaped_gain(xi, a: float):
    """Ramp S(xi) = xi (1+a) / (1 + a xi): S(0)=0, S(1)=1, strictly increasing
    on [0,1] with derivative bounded by 1+a.  a = 0 gives the plain ratio."""
    xi = np.asarray(xi, dtype=float)
    return xi * (1.0 + a) / (1.0 + a * xi)


def jparse_gain_matrix(sigma: np.ndarray, gamma: float, a: float = 0.0) -> np.ndarray:
    """Diagonal of the twist-scaling matrix S: identity in healthy directions,
    shaped ramp in singular ones."""
    sigma = np.asarray(sigma, dtype=float)
    flags = singular_flags(sigma, gamma)
    b = gamma * float(np.max(sigma, initial=0.0))
    gains = np.ones_like(sigma)
    if flags.any():
        gains[flags] = shaped_gain(sigma[flags] / b, a)
    return gains


def jparse_inverse_profile(sigma: np.ndarray, gamma: float, a: float = 0.0) -> np.ndarray:
    """Effective inverse singular values S'_i = S_i / max(sigma_i, b), b =
    gamma sigma_max.  For a = 0 this is sigma_i/b^2 below the threshold and
    1/sigma_i above it."""
    sigma = np.asarray(sigma, dtype=float)
    smax = float(np.max(sigma, initial=0.0))
    if smax == 0.0:
        raise DegenerateJacobianError("all singular values are zero")
    b = gamma * smax
    flags = sigma < b
    profile = np.empty_like(sigma)
    healthy = ~flags
    profile[healthy] = 1.0 / sigma[healthy]
    if flags.any():
        xi = sigma[flags] / b
        profile[flags] = shaped_gain(xi, a) / b
    return profile


def _apply_profile(factors: SvdFactors, profile: np.ndarray) -> np.ndarray:
    # V S' U^T for a diagonal profile of length m.
    m, n = factors.m, factors.n
    Sp = np.zeros((n, m))
    k = min(m, n)
    Sp[:k, :k] = np.diag(profile[:k])
    return factors.V @ Sp @ factors.U.T


def jparse_inverse_from_factors(factors: SvdFactors, gamma: float, a: float = 0.0) -> np.ndarray:
    return _apply_profile(factors, jparse_inverse_profile(factors.sigma, gamma, a))


def jparse_inverse(J: np.ndarray, gamma: float, a: float = 0.0) -> np.ndarray:
    """n x m inverse V Sigma_s^+ S U^T; equals the Moore-Penrose pseudoinverse
    whenever sigma_min >= gamma sigma_max."""
    return jparse_inverse_from_factors(svd(J), gamma, a)


def safety_jacobian_inverse(factors: SvdFactors, gamma: float) -> np.ndarray:
    """Pseudoinverse of the floored-spectrum Jacobian (no twist scaling)."""
    return _apply_profile(factors, 1.0 / safety_sigma(factors.sigma, gamma))


# ---------------------------------------------------------------------------
# Baseline profiles
# ---------------------------------------------------------------------------

def pinv_profile(sigma: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Reciprocals with numerically-zero values (relative to sigma_max)
    replaced by 0, the least-squares convention for rank-deficient input."""
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros_like(sigma)
    nz = sigma > rcond * float(np.max(sigma, initial=0.0))
    out[nz] = 1.0 / sigma[nz]
    return out


def dls_profile(sigma: np.ndarray, lam: float) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if lam < 0.0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0:
        return pinv_profile(sigma)
    return sigma / (sigma**2 + lam**2)


def adls_lambda(w: float, lambda0: float, w0: float) -> float:
    """Damping that fades linearly with the manipulability measure w and
    vanishes at w >= w0."""
    if w < 0.0:
        raise ValueError("manipulability must be >= 0")
    return lambda0 * (1.0 - w / w0) if w < w0 else 0.0


def edls_profile(sigma: np.ndarray, sigma_minus: float, sigma_plus: float, beta: float) -> np.ndarray:
    """Exponentially blended damping: undamped (1/sigma) at or above sigma_plus,
    fully damped (0) at or below sigma_minus, (1 - beta^x)/sigma between.

    With sigma_minus = 0 the blend does NOT vanish as sigma -> 0+: its limit
    is -ln(beta)/sigma_plus, and that limit is returned at sigma == 0 so the
    pathology is observable rather than hidden by a 0/0.
    """
    if not (0.0 <= sigma_minus < sigma_plus):
        raise ValueError("need 0 <= sigma_minus < sigma_plus")
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros_like(sigma)
    hi = sigma >= sigma_plus
    out[hi] = 1.0 / sigma[hi]
    mid = (~hi) & (sigma > sigma_minus)
    x = (sigma[mid] - sigma_minus) / (sigma_plus - sigma_minus)
    out[mid] = (1.0 - beta**x) / sigma[mid]
    if sigma_minus == 0.0:
        zero = sigma == 0.0
        out[zero] = -np.log(beta) / sigma_plus
    return out


def pinv_velocities(factors: SvdFactors, t: np.ndarray) -> np.ndarray:
    return _apply_profile(factors, pinv_profile(factors.sigma)) @ np.asarray(t, float)


def dls_velocities(factors: SvdFactors, t: np.ndarray, lam: float) -> np.ndarray:
    return _apply_profile(factors, dls_profile(factors.sigma, lam)) @ np.asarray(t, float)


def edls_velocities(
    factors: SvdFactors, t: np.ndarray, sigma_minus: float, sigma_plus: float, beta: float
) -> np.ndarray:
    profile = edls_profile(factors.sigma, sigma_minus, sigma_plus, beta)
    return _apply_profile(factors, profile) @ np.asarray(t, float)


# ---------------------------------------------------------------------------
# Resolver configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pinv:
    algorithm = "pinv"

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class DLS:
    lam: float = 0.1
    algorithm = "dls"

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")

    def params(self) -> dict:
        return {"lambda": self.lam}


@dataclass(frozen=True)
class ADLS:
    lambda0: float = 0.17
    w0: float = 0.25
    algorithm = "adls"

    def __post_init__(self):
        if self.lambda0 <= 0.0 or self.w0 <= 0.0:
            raise ValueError("lambda0 and w0 must be positive")

    def params(self) -> dict:
        return {"lambda0": self.lambda0, "w0": self.w0}


@dataclass(frozen=True)
class EDLS:
    sigma_minus: float = 0.0
    sigma_plus: float = 0.3
    beta: float = 0.02
    algorithm = "edls"

    def __post_init__(self):
        if not (0.0 <= self.sigma_minus < self.sigma_plus):
            raise ValueError("need 0 <= sigma_minus < sigma_plus")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")

    def params(self) -> dict:
        return {"sigma_minus": self.sigma_minus, "sigma_plus": self.sigma_plus, "beta": self.beta}


@dataclass(frozen=True)
class JParse:
    gamma: float = 0.1
    a: float = 0.0
    algorithm = "jparse"

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if self.a < 0.0:
            raise ValueError("a must be >= 0")

    def params(self) -> dict:
        return {"gamma": self.gamma, "a": self.a}


ResolverConfig = Union[Pinv, DLS, ADLS, EDLS, JParse]

_CONFIG_TYPES = {"pinv": Pinv, "dls": DLS, "adls": ADLS, "edls": EDLS, "jparse": JParse}

_PARAM_KEYS = {
    "pinv": {},
    "dls": {"lambda": "lam", "lam": "lam"},
    "adls": {"lambda0": "lambda0", "w0": "w0"},
    "edls": {"sigma_minus": "sigma_minus", "sigma_plus": "sigma_plus", "beta": "beta"},
    "jparse": {"gamma": "gamma", "a": "a"},
}


def config_to_dict(cfg: ResolverConfig) -> dict:
    return {"algorithm": cfg.algorithm, "params": cfg.params()}


def config_from_dict(doc: dict) -> ResolverConfig:
    algorithm = doc.get("algorithm")
    if algorithm not in _CONFIG_TYPES:
        raise ValueError(
            f"unknown resolver algorithm {algorithm!r}; valid: {sorted(_CONFIG_TYPES)}"
        )
    keymap = _PARAM_KEYS[algorithm]
    kwargs = {}
    for key, value in (doc.get("params") or {}).items():
        if key not in keymap:
            raise ValueError(f"unknown parameter {key!r} for resolver {algorithm!r}")
        kwargs[keymap[key]] = float(value)
    return _CONFIG_TYPES[algorithm](**kwargs)


def config_to_json(cfg: ResolverConfig) -> str:
    return json.dumps(config_to_dict(cfg))


def config_from_json(text: str) -> ResolverConfig:
    return config_from_dict(json.loads(text))


def config_label(cfg: ResolverConfig) -> str:
    """Short file-name-friendly label, e.g. jparse_gamma0.1_a0."""
    parts = [f"{k.replace('lambda', 'lam')}{v:g}" for k, v in cfg.params().items()]
    return "_".join([cfg.algorithm] + parts) if parts else cfg.algorithm


# ---------------------------------------------------------------------------
# Nullspace objective and the shared resolve() entry point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NullspaceObjective:
    """Secondary joint-velocity objective projected into the task nullspace.

    gradient maps q to an n-vector; entries are clamped to +/- cap before
    projection.  attract_to_zero(k_n) gives the usual -k_n * q bias toward
    the zero configuration.
    """

    gradient: Callable[[np.ndarray], np.ndarray]
    cap: float = 0.6

    def __post_init__(self):
        if self.cap <= 0.0:
            raise ValueError("cap must be positive")

    @classmethod
    def attract_to_zero(cls, k_n: float, cap: float = 0.6) -> "NullspaceObjective":
        return cls(gradient=lambda q: -k_n * np.asarray(q, dtype=float), cap=cap)

    def velocity(self, q: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(self.gradient(q), dtype=float), -self.cap, self.cap)


def inverse_profile_for(cfg: ResolverConfig, sigma: np.ndarray) -> np.ndarray:
    if isinstance(cfg, Pinv):
        return pinv_profile(sigma)
    if isinstance(cfg, DLS):
        return dls_profile(sigma, cfg.lam)
    if isinstance(cfg, ADLS):
        lam = adls_lambda(float(np.prod(sigma)), cfg.lambda0, cfg.w0)
        return dls_profile(sigma, lam)
    if isinstance(cfg, EDLS):
        return edls_profile(sigma, cfg.sigma_minus, cfg.sigma_plus, cfg.beta)
    if isinstance(cfg, JParse):
        return jparse_inverse_profile(sigma, cfg.gamma, cfg.a)
    raise TypeError(f"not a resolver config: {cfg!r}")


def resolve(
    J: np.ndarray,
    t: np.ndarray,
    cfg: ResolverConfig,
    nullspace: Optional[NullspaceObjective] = None,
    q: Optional[np.ndarray] = None,
    factors: Optional[SvdFactors] = None,
) -> np.ndarray:
    """Joint velocities A+ t plus a nullspace-projected secondary objective.

    The projector is I - A+ J for the baselines (A+ being each algorithm's
    damped or exact inverse) and I - Js+ Js for jparse, whose own inverse
    would not keep the secondary term task-neutral near singularities.
    """
    if factors is None:
        factors = svd(J)
    t = np.asarray(t, dtype=float)
    if isinstance(cfg, JParse) and factors.sigma_max == 0.0:
        raise DegenerateJacobianError("all singular values are zero")
    A_inv = _apply_profile(factors, inverse_profile_for(cfg, factors.sigma))
    qdot = A_inv @ t
    if nullspace is not None:
        if q is None:
            raise ValueError("nullspace objective requires the joint state q")
        v_q = nullspace.velocity(q)
        if isinstance(cfg, JParse):
            Js_inv = safety_jacobian_inverse(factors, cfg.gamma)
            projector = np.eye(factors.n) - Js_inv @ safety_jacobian(factors, cfg.gamma)
        else:
            projector = np.eye(factors.n) - A_inv @ factors.reconstruct()
        qdot = qdot + projector @ v_q
    return qdot


def safety_jacobian(factors: SvdFactors, gamma: float) -> np.ndarray:
    """Jacobian rebuilt from the floored spectrum; full rank by construction."""
    m, n = factors.m, factors.n
    S = np.zeros((m, n))
    k = min(m, n)
    S[:k, :k] = np.diag(safety_sigma(factors.sigma, gamma)[:k])
    return factors.U @ S @ factors.V.T
