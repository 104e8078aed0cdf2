"""Anchor lattice generation and confidence-guided anchor selection.

Candidate rectangles are preset fractions of the image size, centered on
the input point; the one whose crop earns the highest mean recognition
confidence wins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyAnchorList, PointOutOfBounds
from .geometry import Point2, Rect
from .raster import GrayImage, crop_axis_aligned
from .recognize import RecognitionResult, Recognizer, aggregate_confidence

FractionPair = tuple[float, float]


@dataclass
class AnchorLattice:
    """Anchor sizes as (width, height) fractions of the image size."""

    extra_long: list[FractionPair]
    long: list[FractionPair]
    normal: list[FractionPair]
    short: list[FractionPair]

    def __post_init__(self):
        for name in ("extra_long", "long", "normal", "short"):
            for wf, hf in getattr(self, name):
                if not (0.0 < wf <= 1.0 and 0.0 < hf <= 1.0):
                    raise ValueError(f"{name} fraction ({wf}, {hf}) outside (0, 1]")

    def entries(self) -> list[FractionPair]:
        return [*self.extra_long, *self.long, *self.normal, *self.short]

    @classmethod
    def from_json(cls, path) -> "AnchorLattice":
        spec = json.loads(Path(path).read_text())
        return cls(
            extra_long=[tuple(p) for p in spec["extra_long"]],
            long=[tuple(p) for p in spec["long"]],
            normal=[tuple(p) for p in spec["normal"]],
            short=[tuple(p) for p in spec["short"]],
        )


def default_lattice() -> AnchorLattice:
    """The 21-entry default lattice (4 extra-long, 6 long, 5 normal, 6 short).

    Extra-long anchors pair heights h/(5q), q=1..4 with widths 2w/3 for
    q=1,2 and 2w/5 for q=3,4. Long/short anchors zip the factor sets
    i=1..6 and j=1,2,4,6,8,10 index-wise; normal anchors are square-ish
    with k in {1,2,3,6,10}.
    """
    j_set = [1, 2, 4, 6, 8, 10]
    i_set = [1, 2, 3, 4, 5, 6]
    return AnchorLattice(
        extra_long=[(2 / 3, 1 / 5), (2 / 3, 1 / 10), (2 / 5, 1 / 15), (2 / 5, 1 / 20)],
        long=[(2 / (5 * j), 1 / (5 * i)) for j, i in zip(j_set, i_set)],
        normal=[(2 / (5 * k), 2 / (5 * k)) for k in (1, 2, 3, 6, 10)],
        short=[(1 / (5 * i), 2 / (5 * j)) for j, i in zip(j_set, i_set)],
    )


def generate_anchors(point: Point2, img: GrayImage, lattice: AnchorLattice) -> list[Rect]:
    """One axis-aligned rect per lattice entry, centered on ``point``.

    Anchors overhanging the image are kept at full size (cropping clamps
    at the border); only anchors whose overlap with the image is empty
    would be dropped, which cannot happen for an in-bounds center.
    """
    if not (0 <= point.x <= img.width - 1 and 0 <= point.y <= img.height - 1):
        raise PointOutOfBounds(f"({point.x}, {point.y}) outside {img.width}x{img.height}")
    anchors = []
    for wf, hf in lattice.entries():
        rect = Rect(point.x, point.y, wf * img.width, hf * img.height)
        overlap_x = min(rect.cx + rect.width / 2, img.width - 1.0) - max(rect.cx - rect.width / 2, 0.0)
        overlap_y = min(rect.cy + rect.height / 2, img.height - 1.0) - max(rect.cy - rect.height / 2, 0.0)
        if overlap_x <= 0 or overlap_y <= 0:
            continue
        anchors.append(rect)
    return anchors


@dataclass
class ScoredAnchor:
    rect: Rect
    recognition: RecognitionResult
    score: float


def select_anchor(anchors: list[Rect], img: GrayImage, recognizer: Recognizer) -> ScoredAnchor:
    """Crop, recognize, and score each anchor; return the argmax.

    Ties break toward the smaller anchor area, then earlier list order.
    """
    if not anchors:
        raise EmptyAnchorList("no anchors to score")
    best: ScoredAnchor | None = None
    best_area = 0.0
    for rect in anchors:
        result = recognizer.recognize(crop_axis_aligned(img, rect))
        score = aggregate_confidence(result)
        rect_area = rect.width * rect.height
        if (
            best is None
            or score > best.score
            or (score == best.score and rect_area < best_area)
        ):
            best = ScoredAnchor(rect, result, score)
            best_area = rect_area
    return best
