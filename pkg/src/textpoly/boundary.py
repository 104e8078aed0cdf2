"""Boundary-point sampling, TPS rectification, and recognition-guided refinement.

A boundary is 10 points along the upper contour and 10 along the lower,
both left to right. Rectification fits a TPS between those 20 points and
the border of an upright rectangle, then pulls pixels through it so a
recognizer sees flattened text. Refinement is derivative-free coordinate
descent on the per-point vertical offsets, scored by recognition
confidence minus a curvature penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegeneratePolygon, SingularSystem
from .geometry import Point2, Polygon, Rect, rect_to_polygon
from .raster import GrayImage, sample_bilinear_many
from .recognize import Recognizer, aggregate_confidence
from .tps import TpsTransform, apply_tps_array, fit_tps, tps_basis

CONTOUR_POINTS = 10
RECTIFIED_HEIGHT = 32

# Radial basis of the output pixel grid against the rectangle control
# points depends only on the output size; cache it across refine evals.
_GRID_BASIS_CACHE: dict[tuple[int, int], np.ndarray] = {}
_GRID_BASIS_LIMIT = 48


@dataclass
class BoundaryPolygon:
    """10 upper + 10 lower contour points, each left to right."""

    upper: tuple[Point2, ...]
    lower: tuple[Point2, ...]

    def __post_init__(self):
        if len(self.upper) != CONTOUR_POINTS or len(self.lower) != CONTOUR_POINTS:
            raise ValueError("boundary needs exactly 10 points per contour")
        self.upper = tuple(self.upper)
        self.lower = tuple(self.lower)

    def as_polygon(self, care: bool = True) -> Polygon:
        """Closed ring: upper left-to-right, then lower right-to-left."""
        return Polygon(self.upper + tuple(reversed(self.lower)), care=care)

    def as_array(self) -> np.ndarray:
        """All 20 points as (20, 2): upper block then lower block."""
        return np.array([(p.x, p.y) for p in self.upper + self.lower], dtype=float)

    @classmethod
    def from_array(cls, pts: np.ndarray) -> "BoundaryPolygon":
        upper = tuple(Point2(float(x), float(y)) for x, y in pts[:CONTOUR_POINTS])
        lower = tuple(Point2(float(x), float(y)) for x, y in pts[CONTOUR_POINTS:])
        return cls(upper, lower)


@dataclass
class RefineConfig:
    """Coordinate-descent settings for :func:`refine_boundary`.

    ``initial_step=None`` resolves to a quarter of the boundary height at
    refinement time.
    """

    max_rounds: int = 30
    initial_step: float | None = None
    min_step: float = 0.5
    smoothness_weight: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.min_step <= 0:
            raise ValueError("min_step must be > 0")
        if self.initial_step is not None and self.initial_step <= self.min_step:
            raise ValueError("initial_step must exceed min_step")
        if self.smoothness_weight < 0:
            raise ValueError("smoothness_weight must be >= 0")


def sample_boundary(rect: Rect) -> BoundaryPolygon:
    """10 equally spaced points (corners included) on the top and bottom edges."""
    corners = rect_to_polygon(rect).as_array()  # TL, TR, BR, BL
    t = np.linspace(0.0, 1.0, CONTOUR_POINTS)[:, None]
    upper = corners[0] + t * (corners[1] - corners[0])
    lower = corners[3] + t * (corners[2] - corners[3])
    return BoundaryPolygon(
        tuple(Point2(float(x), float(y)) for x, y in upper),
        tuple(Point2(float(x), float(y)) for x, y in lower),
    )


def _contour_length(pts: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def rectified_width(b: BoundaryPolygon) -> int:
    """Aspect-preserving output width at the canonical height, floored at 32.

    The mean contour length is scaled by 32 / boundary height so the
    rectified crop never distorts glyph aspect (the template recognizer
    consumes it at this height without further resizing).
    """
    arr = b.as_array()
    mean_len = 0.5 * (_contour_length(arr[:CONTOUR_POINTS]) + _contour_length(arr[CONTOUR_POINTS:]))
    height = float(np.mean(np.linalg.norm(arr[CONTOUR_POINTS:] - arr[:CONTOUR_POINTS], axis=1)))
    if height <= 0:
        return RECTIFIED_HEIGHT
    return max(RECTIFIED_HEIGHT, round(mean_len * RECTIFIED_HEIGHT / height))


def _rectangle_points(out_w: float, out_h: float) -> np.ndarray:
    """20 border points on the upright rectangle [0, w] x [0, h]."""
    xs = np.linspace(0.0, out_w, CONTOUR_POINTS)
    upper = np.column_stack((xs, np.zeros(CONTOUR_POINTS)))
    lower = np.column_stack((xs, np.full(CONTOUR_POINTS, out_h)))
    return np.vstack((upper, lower))


def fit_unwarp(b: BoundaryPolygon, out_w: int, out_h: int,
               regularization: float = 0.0) -> TpsTransform:
    """TPS mapping rectified coordinates back onto the boundary in image space."""
    return fit_tps(_rectangle_points(out_w, out_h), b.as_array(), regularization)


def rectify_crop(img: GrayImage, b: BoundaryPolygon, out_w: int, out_h: int,
                 regularization: float = 0.0) -> GrayImage:
    """Flatten the boundary region onto an out_w x out_h upright raster.

    Each output pixel center maps through the inverse-direction TPS
    (fitted with swapped correspondences) into image space and is
    bilinearly sampled there.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    unwarp = fit_unwarp(b, out_w, out_h, regularization)
    key = (out_w, out_h)
    basis = _GRID_BASIS_CACHE.get(key)
    if basis is None:
        gx, gy = np.meshgrid(np.arange(out_w, dtype=float), np.arange(out_h, dtype=float))
        grid = np.stack((gx.ravel(), gy.ravel()), axis=1)
        basis = tps_basis(unwarp.source_points, grid)
        if len(_GRID_BASIS_CACHE) >= _GRID_BASIS_LIMIT:
            _GRID_BASIS_CACHE.pop(next(iter(_GRID_BASIS_CACHE)))
        _GRID_BASIS_CACHE[key] = basis
    mapped = (basis @ unwarp.params.T).reshape(out_h, out_w, 2)
    values = sample_bilinear_many(img, mapped[..., 0], mapped[..., 1])
    try:
        region = b.as_polygon()
    except DegeneratePolygon:
        region = None
    return GrayImage(np.clip(values, 0.0, 1.0), region=region)


def _point_normals(pts: np.ndarray) -> np.ndarray:
    """Unit normals of a polyline from central-difference tangents."""
    tangents = np.empty_like(pts)
    tangents[1:-1] = pts[2:] - pts[:-2]
    tangents[0] = pts[1] - pts[0]
    tangents[-1] = pts[-1] - pts[-2]
    normals = np.column_stack((-tangents[:, 1], tangents[:, 0]))
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return normals / norms


def _curvature_penalty(offsets: np.ndarray, height: float) -> float:
    # Offsets are normalized by the boundary height so the penalty is
    # commensurate with the [0, 1] confidence term at any text size.
    scaled = offsets / max(height, 1.0)
    upper, lower = scaled[:CONTOUR_POINTS], scaled[CONTOUR_POINTS:]
    total = 0.0
    for c in (upper, lower):
        second = c[:-2] - 2 * c[1:-1] + c[2:]
        total += float(np.sum(second**2))
    return total


def boundary_score(img: GrayImage, b: BoundaryPolygon, recognizer: Recognizer) -> float:
    """Mean recognition confidence of the rectified boundary crop."""
    w = rectified_width(b)
    try:
        crop = rectify_crop(img, b, w, RECTIFIED_HEIGHT)
    except SingularSystem:
        return float("-inf")
    return aggregate_confidence(recognizer.recognize(crop))


def refine_boundary(img: GrayImage, init: BoundaryPolygon, recognizer: Recognizer,
                    cfg: RefineConfig) -> BoundaryPolygon:
    """Hill-climb the 20 per-point offsets along the initial contour normals.

    Each round tries +/-step on every offset and keeps strictly improving
    moves; the step halves after a round with no acceptance and the search
    stops below ``min_step`` or after ``max_rounds``. The returned
    objective never falls below the initial one.
    """
    base = init.as_array()
    normals = np.vstack(
        (_point_normals(base[:CONTOUR_POINTS]), _point_normals(base[CONTOUR_POINTS:]))
    )
    height = float(np.mean(np.linalg.norm(base[CONTOUR_POINTS:] - base[:CONTOUR_POINTS], axis=1)))
    step = cfg.initial_step if cfg.initial_step is not None else max(height / 4.0, cfg.min_step * 2)

    def objective(offsets: np.ndarray) -> float:
        pts = base + offsets[:, None] * normals
        score = boundary_score(img, BoundaryPolygon.from_array(pts), recognizer)
        return score - cfg.smoothness_weight * _curvature_penalty(offsets, height)

    offsets = np.zeros(len(base))
    current = objective(offsets)
    for _ in range(cfg.max_rounds):
        accepted = False
        for k in range(len(offsets)):
            for delta in (step, -step):
                trial = offsets.copy()
                trial[k] += delta
                value = objective(trial)
                if value > current:
                    offsets, current = trial, value
                    accepted = True
                    break
        if not accepted:
            step /= 2.0
            if step < cfg.min_step:
                break
    return BoundaryPolygon.from_array(base + offsets[:, None] * normals)
