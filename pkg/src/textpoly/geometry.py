"""Points, rectangles, polygons, and rasterized IoU.

All coordinates are in image pixels with pixel centers at integer
positions. Polygon orientation is normalized to positive shoelace area at
construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePolygon


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class Rect:
    """Center + extents rectangle, optionally rotated about its center."""

    cx: float
    cy: float
    width: float
    height: float
    angle: float = 0.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"non-positive rect extents {self.width}x{self.height}")


@dataclass
class Polygon:
    """Ordered vertex ring with positive shoelace area.

    Clockwise input is silently reversed; consecutive duplicate vertices
    are dropped. ``care=False`` marks a region excluded from evaluation.
    """

    vertices: tuple[Point2, ...]
    care: bool = True
    _array: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = [Point2(float(p.x), float(p.y)) if not isinstance(p, Point2) else p
               for p in self.vertices]
        dedup: list[Point2] = []
        for p in pts:
            if not dedup or (p.x != dedup[-1].x or p.y != dedup[-1].y):
                dedup.append(p)
        if len(dedup) > 1 and dedup[0].x == dedup[-1].x and dedup[0].y == dedup[-1].y:
            dedup.pop()
        if len(dedup) < 3:
            raise DegeneratePolygon(f"{len(dedup)} distinct vertices")
        signed = _shoelace(np.array([(p.x, p.y) for p in dedup]))
        if signed == 0.0:
            raise DegeneratePolygon("zero signed area")
        if signed < 0:
            dedup.reverse()
        self.vertices = tuple(dedup)
        self._array = np.array([(p.x, p.y) for p in self.vertices], dtype=float)

    def as_array(self) -> np.ndarray:
        """Vertices as an (N, 2) float array."""
        return self._array

    def bounds(self) -> tuple[float, float, float, float]:
        a = self._array
        return float(a[:, 0].min()), float(a[:, 1].min()), float(a[:, 0].max()), float(a[:, 1].max())


def _shoelace(arr: np.ndarray) -> float:
    x, y = arr[:, 0], arr[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(np.sum(x * yn - xn * y) / 2.0)


def area(poly: Polygon) -> float:
    """Shoelace area in square pixels (positive by construction)."""
    return _shoelace(poly.as_array())


def centroid(poly: Polygon) -> Point2:
    """Area-weighted (shoelace) centroid."""
    arr = poly.as_array()
    x, y = arr[:, 0], arr[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = np.sum(cross) / 2.0
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return Point2(float(cx), float(cy))


def rect_to_polygon(r: Rect) -> Polygon:
    """Four corners, counter-clockwise, rotated by ``angle`` about the center."""
    hw, hh = r.width / 2.0, r.height / 2.0
    corners = np.array([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)])
    if r.angle != 0.0:
        c, s = math.cos(r.angle), math.sin(r.angle)
        rot = np.array([[c, -s], [s, c]])
        corners = corners @ rot.T
    corners = corners + (r.cx, r.cy)
    return Polygon(tuple(Point2(float(x), float(y)) for x, y in corners))


def _inside_mask(poly_arr: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Even-odd (crossing number) point-in-polygon test, vectorized."""
    inside = np.zeros(px.shape, dtype=bool)
    n = len(poly_arr)
    for i in range(n):
        x1, y1 = poly_arr[i]
        x2, y2 = poly_arr[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(invalid="ignore"):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < x_at)
    return inside


def _sample_grid(x0: float, y0: float, x1: float, y1: float, resolution: int):
    nx = max(1, int(math.ceil((x1 - x0) * resolution)))
    ny = max(1, int(math.ceil((y1 - y0) * resolution)))
    xs = x0 + (np.arange(nx) + 0.5) / resolution
    ys = y0 + (np.arange(ny) + 0.5) / resolution
    return np.meshgrid(xs, ys)


def iou(a: Polygon, b: Polygon, resolution: int = 4) -> float:
    """Intersection-over-union by subpixel rasterization.

    Both polygons are filled (even-odd rule) on a shared grid of
    ``resolution`` samples per pixel covering their joint bounding box, so
    the result is exactly symmetric and iou(a, a) == 1.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    ax0, ay0, ax1, ay1 = a.bounds()
    bx0, by0, bx1, by1 = b.bounds()
    if ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0:
        return 0.0
    x0 = math.floor(min(ax0, bx0))
    y0 = math.floor(min(ay0, by0))
    x1 = math.ceil(max(ax1, bx1))
    y1 = math.ceil(max(ay1, by1))
    px, py = _sample_grid(x0, y0, x1, y1, resolution)
    in_a = _inside_mask(a.as_array(), px, py)
    in_b = _inside_mask(b.as_array(), px, py)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    inter = np.count_nonzero(in_a & in_b)
    return inter / union


def rasterize(poly: Polygon, resolution: int = 4) -> tuple[np.ndarray, float, float]:
    """Boolean coverage mask over the polygon's own bounding box.

    Returns (mask, x0, y0) where sample (i, j) sits at
    (x0 + (j + 0.5)/resolution, y0 + (i + 0.5)/resolution).
    """
    bx0, by0, bx1, by1 = poly.bounds()
    x0, y0 = math.floor(bx0), math.floor(by0)
    px, py = _sample_grid(x0, y0, math.ceil(bx1), math.ceil(by1), resolution)
    return _inside_mask(poly.as_array(), px, py), float(x0), float(y0)


def contains_points(poly: Polygon, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Even-odd membership for arbitrary query points."""
    return _inside_mask(poly.as_array(), np.asarray(xs, float), np.asarray(ys, float))
