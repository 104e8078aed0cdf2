"""Thin-plate spline fitting and evaluation.

The transform is Phi(p) = m0 + M.p + sum_i w_i U(|p - p_i|) with radial
basis U(r) = r^2 ln r (U(0) = 0). Fitting solves the standard block
system [[K + lam*I, P], [P^T, 0]] so the side conditions sum(w) = 0 and
sum(w_i p_i) = 0 hold per output coordinate; with lam = 0 the transform
interpolates the correspondences exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSystem
from .geometry import Point2


def radial_basis(r: np.ndarray) -> np.ndarray:
    """U(r) = r^2 ln r with the removable singularity U(0) = 0."""
    return _radial_from_sq(np.asarray(r, dtype=float) ** 2)


def _radial_from_sq(d2: np.ndarray) -> np.ndarray:
    # r^2 ln r = d2 * ln(d2) / 2 avoids the sqrt on the hot warp path.
    with np.errstate(divide="ignore", invalid="ignore"):
        u = 0.5 * d2 * np.log(d2)
    return np.where(d2 > 0.0, u, 0.0)


@dataclass
class TpsTransform:
    """Fitted parameters in the [2, N+3] layout [m0 | M | w_1..w_N] per coordinate."""

    source_points: np.ndarray  # (N, 2)
    target_points: np.ndarray  # (N, 2)
    params: np.ndarray  # (2, N + 3)

    @property
    def affine_offset(self) -> np.ndarray:
        return self.params[:, 0]

    @property
    def affine_matrix(self) -> np.ndarray:
        return self.params[:, 1:3]

    @property
    def weights(self) -> np.ndarray:
        """(N, 2) radial weights, one column per output coordinate."""
        return self.params[:, 3:].T


def _as_points(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        arr = np.array(
            [(p.x, p.y) if isinstance(p, Point2) else (p[0], p[1]) for p in points],
            dtype=float,
        )
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected (N, 2) points, got {arr.shape}")
    return arr


def fit_tps(source, target, regularization: float = 0.0) -> TpsTransform:
    """Fit the TPS mapping source -> target control points."""
    src = _as_points(source)
    dst = _as_points(target)
    n = len(src)
    if n < 3:
        raise ValueError("at least 3 control points required")
    if len(dst) != n:
        raise ValueError("source/target length mismatch")
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    diff = src[:, None, :] - src[None, :, :]
    k = _radial_from_sq(diff[..., 0] ** 2 + diff[..., 1] ** 2) + regularization * np.eye(n)
    p = np.column_stack((np.ones(n), src))
    lhs = np.zeros((n + 3, n + 3))
    lhs[:n, :n] = k
    lhs[:n, n:] = p
    lhs[n:, :n] = p.T
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = dst
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("non-finite solution")
    if regularization == 0.0:
        resid = k @ sol[:n] + p @ sol[n:] - dst
        scale = max(1.0, float(np.abs(dst).max()))
        if np.abs(resid).max() > 1e-6 * scale:
            raise SingularSystem("control points nearly collinear or duplicated")
    params = np.empty((2, n + 3))
    params[:, 0] = sol[n]        # m0
    params[:, 1:3] = sol[n + 1:].T  # M columns for x, y inputs
    params[:, 3:] = sol[:n].T    # radial weights
    return TpsTransform(src, dst, params)


def tps_basis(source_points: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Basis matrix [1 | x | y | U(|p - p_i|)] so Phi(pts) = basis @ params.T.

    Useful for evaluating many transforms that share source points over a
    fixed grid: the basis is computed once and reused.
    """
    flat = np.asarray(pts, dtype=float).reshape(-1, 2)
    dx = flat[:, 0, None] - source_points[None, :, 0]
    dy = flat[:, 1, None] - source_points[None, :, 1]
    u = _radial_from_sq(dx * dx + dy * dy)  # (M, N)
    return np.hstack((np.ones((len(flat), 1)), flat, u))


def apply_tps_array(t: TpsTransform, pts: np.ndarray) -> np.ndarray:
    """Evaluate the transform at an (M, 2) array of points."""
    pts = np.asarray(pts, dtype=float)
    out = tps_basis(t.source_points, pts) @ t.params.T
    return out.reshape(pts.shape)


def apply_tps(t: TpsTransform, p: Point2) -> Point2:
    """Evaluate the transform at a single point."""
    out = apply_tps_array(t, np.array([[p.x, p.y]]))[0]
    return Point2(float(out[0]), float(out[1]))
