"""Attention-guided horizontal trimming of a boundary polygon.

Per-step attention rows are binarized at a threshold; the union of
attended columns (end symbol excluded) defines the text's horizontal
span in the rectified crop, and the boundary is re-sampled to cover only
that span.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import (
    CONTOUR_POINTS,
    RECTIFIED_HEIGHT,
    BoundaryPolygon,
    fit_unwarp,
    rectified_width,
    rectify_crop,
)
from .errors import EmptySpan, SingularSystem
from .raster import GrayImage
from .recognize import Recognizer
from .tps import apply_tps_array


@dataclass
class TrimConfig:
    """Attention threshold for binarization (Table-style sweep range 0.01-0.05)."""

    tau: float = 0.03

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ValueError("tau must lie in (0, 1)")


def binarize_attention(attention: np.ndarray, tau: float) -> np.ndarray:
    """1 where the weight reaches ``tau`` (inclusive), else 0."""
    att = np.asarray(attention, dtype=float)
    return (att >= tau).astype(np.uint8)


def attended_span(binary: np.ndarray) -> tuple[int, int]:
    """Hull of attended columns, OR-ed over all steps except the end symbol."""
    binary = np.asarray(binary)
    if binary.ndim != 2:
        raise ValueError("expected a T x W matrix")
    cols = binary[:-1].any(axis=0)  # final row is the end-symbol step
    hits = np.flatnonzero(cols)
    if hits.size == 0:
        raise EmptySpan("no attended column")
    return int(hits[0]), int(hits[-1])


def trim_boundary(b: BoundaryPolygon, img: GrayImage, recognizer: Recognizer,
                  cfg: TrimConfig) -> BoundaryPolygon:
    """Trim the boundary to the attended column span of its rectified crop.

    The span [first, last] over ``feature_width`` columns becomes the
    fractional range [first/W, (last+1)/W] of the rectified width; the
    trimmed rectangle's border points map back to image space through the
    inverse TPS. An empty span leaves the boundary unchanged.
    """
    out_w = rectified_width(b)
    try:
        crop = rectify_crop(img, b, out_w, RECTIFIED_HEIGHT)
    except SingularSystem:
        return b
    result = recognizer.recognize(crop)
    binary = binarize_attention(result.attention, cfg.tau)
    try:
        first, last = attended_span(binary)
    except EmptySpan:
        return b
    lo = first / result.feature_width * out_w
    hi = (last + 1) / result.feature_width * out_w
    unwarp = fit_unwarp(b, out_w, RECTIFIED_HEIGHT)
    xs = np.linspace(lo, hi, CONTOUR_POINTS)
    upper = np.column_stack((xs, np.zeros(CONTOUR_POINTS)))
    lower = np.column_stack((xs, np.full(CONTOUR_POINTS, float(RECTIFIED_HEIGHT))))
    mapped = apply_tps_array(unwarp, np.vstack((upper, lower)))
    return BoundaryPolygon.from_array(mapped)
