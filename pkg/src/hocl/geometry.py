"""Poincare-ball geometry (curvature -1).

Points are plain float64 arrays whose last axis is the ball dimension. Every
function that returns a point clips it to ``norm <= 1 - BALL_EPS`` so callers
never hold a point on or outside the boundary.
"""
from __future__ import annotations

import numpy as np

BALL_EPS = 1e-5


def _as_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    return arr


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


def conformal_factor(x) -> float:
    """lambda_x = 2 / (1 - |x|^2)."""
    x = _as_vector(x)
    return 2.0 / (1.0 - float(x @ x))


def check_point(x, eps: float = 0.0) -> np.ndarray:
    """Return ``x`` as an array, raising if it is not strictly inside the ball."""
    x = _as_vector(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    if np.linalg.norm(x) >= 1.0 - eps:
        raise ValueError(f"point norm {np.linalg.norm(x):.17g} is not inside the ball")
    return x


def project_to_ball(x, eps: float = BALL_EPS) -> np.ndarray:
    """Rescale ``x`` onto radius ``1 - eps`` if it lies outside it; identity otherwise."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot project a non-finite vector into the ball")
    limit = 1.0 - eps
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.where(norm > limit, limit / np.where(norm > 0, norm, 1.0), 1.0)
    return x * scale


def _arcosh1p(u):
    # arcosh(1 + u) without the cancellation of computing 1 + u first
    return np.log1p(u + np.sqrt(u * (u + 2.0)))


def hyperbolic_distance(x, y) -> float:
    """Geodesic distance between two points of the ball."""
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    _check_same_dim(x, y)
    diff = x - y
    num = 2.0 * float(diff @ diff)
    den = (1.0 - float(x @ x)) * (1.0 - float(y @ y))
    return float(_arcosh1p(num / den))


def pairwise_distances(points) -> np.ndarray:
    """All-pairs geodesic distances for an ``(n, d)`` array of points.

    O(n^2 d); the diagonal is exactly zero.
    """
    z = np.asarray(points, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"points must be an (n, d) array, got shape {z.shape}")
    sq = np.einsum("ij,ij->i", z, z)
    diff2 = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.maximum(diff2, 0.0, out=diff2)
    den = (1.0 - sq)[:, None] * (1.0 - sq)[None, :]
    dist = _arcosh1p(2.0 * diff2 / den)
    np.fill_diagonal(dist, 0.0)
    return dist


def mobius_add(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xy = float(x @ y)
    x2 = float(x @ x)
    y2 = float(y @ y)
    num = (1.0 + 2.0 * xy + y2) * x + (1.0 - x2) * y
    return num / (1.0 + 2.0 * xy + x2 * y2)


def exp_map(base, v) -> np.ndarray:
    """Exponential map exp_base(v).

    Uses the Mobius form ``base (+) tanh(lambda_base |v| / 2) v/|v|``, which at
    the origin is ``tanh(|v|) v/|v|``. The result is clipped into the ball.
    """
    base = _as_vector(base, "base")
    v = _as_vector(v, "v")
    _check_same_dim(base, v)
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        return project_to_ball(base)
    lam = conformal_factor(base)
    step = np.tanh(0.5 * lam * vnorm) * (v / vnorm)
    return project_to_ball(mobius_add(base, step))


def exp_map_origin(v) -> np.ndarray:
    """Row-wise exp_0 for a vector or an ``(n, d)`` array of tangent vectors."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(norm > 0.0, norm, 1.0)
    return project_to_ball(np.tanh(norm) * v / safe)


def exp_map_rows(bases, vs) -> np.ndarray:
    """Row-wise exp_{bases[i]}(vs[i]) for ``(n, d)`` arrays; agrees with :func:`exp_map` per row."""
    z = np.asarray(bases, dtype=np.float64)
    v = np.asarray(vs, dtype=np.float64)
    if z.ndim != 2 or z.shape != v.shape:
        raise ValueError(f"bases and tangent vectors must be matching (n, d) arrays, got {z.shape} and {v.shape}")
    vnorm = np.linalg.norm(v, axis=1, keepdims=True)
    z2 = np.einsum("ij,ij->i", z, z)[:, None]
    lam = 2.0 / (1.0 - z2)
    y = np.tanh(0.5 * lam * vnorm) * v / np.where(vnorm > 0.0, vnorm, 1.0)
    zy = np.einsum("ij,ij->i", z, y)[:, None]
    y2 = np.einsum("ij,ij->i", y, y)[:, None]
    out = ((1.0 + 2.0 * zy + y2) * z + (1.0 - z2) * y) / (1.0 + 2.0 * zy + z2 * y2)
    return project_to_ball(out)


def riemannian_grad(base, euclidean_grad) -> np.ndarray:
    """Convert a Euclidean gradient at ``base`` to the Riemannian one (divide by lambda^2)."""
    base = _as_vector(base, "base")
    g = _as_vector(euclidean_grad, "euclidean_grad")
    _check_same_dim(base, g)
    scale = (1.0 - float(base @ base)) ** 2 / 4.0
    return g * scale


def embed_input(features, projection) -> np.ndarray:
    """exp_0(P @ features), clipped into the ball."""
    x = _as_vector(features, "features")
    P = np.asarray(projection, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != x.shape[0]:
        raise ValueError(f"projection of shape {P.shape} cannot act on a vector of length {x.shape[0]}")
    return exp_map_origin(P @ x)
