"""Poincaré-ball primitives (curvature -1, open unit ball).

Convention used throughout the package:

    d(u, v)   = arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))
    exp_0(v)  = tanh(|v|/2) * v/|v|        (0 maps to 0)

so that d(0, exp_0(v)) = |v| holds exactly.  Points are kept strictly
inside the ball by ``project_to_ball`` (max norm 1 - BALL_EPS), which keeps
the arcosh argument in-domain in double precision.
"""
from __future__ import annotations

import numpy as np

from .errors import DimMismatch, NonFiniteInput, OutsideBall

BALL_EPS = 1e-5
MAX_NORM = 1.0 - BALL_EPS


def _as_vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("vector contains non-finite entries")
    return v


def _check_in_ball(v: np.ndarray) -> None:
    n = float(np.linalg.norm(v))
    if n >= 1.0:
        raise OutsideBall(f"point norm {n} is not inside the unit ball")


def poincare_distance(u, v) -> float:
    """Geodesic distance between two points of the open unit ball."""
    u, v = _as_vec(u), _as_vec(v)
    if u.shape != v.shape:
        raise DimMismatch(f"dim {u.shape} vs {v.shape}")
    _check_in_ball(u)
    _check_in_ball(v)
    du = 1.0 - float(u @ u)
    dv = 1.0 - float(v @ v)
    diff = u - v
    arg = 1.0 + 2.0 * float(diff @ diff) / (du * dv)
    return float(np.arccosh(max(arg, 1.0)))


def exp_map_origin(v) -> np.ndarray:
    """Map a tangent vector at the origin into the ball: tanh(|v|/2) v/|v|."""
    v = _as_vec(v)
    r = float(np.linalg.norm(v))
    if r == 0.0:
        return np.zeros_like(v)
    return project_to_ball(np.tanh(r / 2.0) / r * v)


def project_to_ball(x) -> np.ndarray:
    """Rescale x to norm 1 - BALL_EPS if it is at or beyond that shell."""
    x = _as_vec(x)
    n = float(np.linalg.norm(x))
    if n >= MAX_NORM:
        return x * (MAX_NORM / n)
    return x


def riemannian_rescale(x, g_euclidean) -> np.ndarray:
    """Convert a Euclidean gradient at x into the Riemannian one.

    The inverse metric factor of the ball is ((1 - |x|^2)^2) / 4.
    """
    x, g = _as_vec(x), np.asarray(g_euclidean, dtype=np.float64)
    if x.shape != g.shape:
        raise DimMismatch(f"dim {x.shape} vs {g.shape}")
    _check_in_ball(x)
    factor = (1.0 - float(x @ x)) ** 2 / 4.0
    return factor * g


def poincare_distance_grad_u(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Gradient of poincare_distance(u, v) with respect to u.

    Closed form of the arcosh chain rule; the arcosh derivative  is clamped
    away from the u == v singularity.
    """
    alpha = 1.0 - float(u @ u)
    beta = 1.0 - float(v @ v)
    diff = u - v
    gamma = 1.0 + 2.0 * float(diff @ diff) / (alpha * beta)
    denom = np.sqrt(max(gamma * gamma - 1.0, 1e-15))
    coeff = 4.0 / (beta * denom)
    return coeff * (((float(v @ v) - 2.0 * float(u @ v) + 1.0) / alpha**2) * u
                    - v / alpha)


def exp_map_origin_jacobian(z: np.ndarray) -> np.ndarray:
    """Jacobian of exp_map_origin at z (symmetric dim x dim matrix)."""
    d = z.shape[0]
    r = float(np.linalg.norm(z))
    if r < 1e-12:
        return 0.5 * np.eye(d)
    s = np.tanh(r / 2.0) / r
    sech2 = 1.0 / np.cosh(r / 2.0) ** 2
    ds = (0.5 * r * sech2 - np.tanh(r / 2.0)) / r**2
    return s * np.eye(d) + (ds / r) * np.outer(z, z)
