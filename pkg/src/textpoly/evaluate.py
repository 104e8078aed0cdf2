"""Detection evaluation: IoU-threshold P/R/H matching and the DIST point metric.

Matching is greedy one-to-one in descending IoU (ascending distance for
points). Predictions whose best overlap is a don't-care ground truth at
IoU >= 0.5 are removed from the prediction count, and don't-care ground
truths never enter the recall denominator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Point2, Polygon, iou

DONT_CARE_IOU = 0.5
DEFAULT_IOU_THRESHOLDS = (0.1, 0.3, 0.5, 0.7)
DEFAULT_DIST_RADII = (5.0, 10.0, 20.0, 30.0)


@dataclass
class MatchResult:
    """P/R/H at one threshold, with the pairs that produced them."""

    precision: float
    recall: float
    hmean: float
    matches: int
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass
class EvalReport:
    per_threshold: dict[float, MatchResult]
    matched_pairs: list[tuple[int, int, float]]  # pairs at the lowest threshold
    counts: tuple[int, int, int]  # counted preds, counted gts, suppressed preds


@dataclass
class DistReport:
    per_dist: dict[float, MatchResult]


def _prh(matches: int, num_pred: int, num_gt: int,
         pairs: list[tuple[int, int, float]]) -> MatchResult:
    p = matches / num_pred if num_pred > 0 else 0.0
    r = matches / num_gt if num_gt > 0 else 0.0
    h = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
    return MatchResult(p, r, h, matches, pairs,
                       precision_defined=num_pred > 0, recall_defined=num_gt > 0)


def _greedy_match(scored_pairs: list[tuple[float, int, int]],
                  best_first: bool) -> list[tuple[int, int, float]]:
    # Sort by score then by indices so ties resolve deterministically.
    ordered = sorted(scored_pairs, key=lambda t: (-t[0] if best_first else t[0], t[1], t[2]))
    used_p: set[int] = set()
    used_g: set[int] = set()
    out = []
    for score, pi, gi in ordered:
        if pi in used_p or gi in used_g:
            continue
        used_p.add(pi)
        used_g.add(gi)
        out.append((pi, gi, score))
    return out


def iou_matrix(preds: list[Polygon], gts: list[Polygon], resolution: int = 4) -> np.ndarray:
    m = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            m[i, j] = iou(p, g, resolution)
    return m


def _suppressed(matrix: np.ndarray, gts: list[Polygon]) -> set[int]:
    """Prediction indices whose best overlap is a don't-care GT at IoU >= 0.5."""
    out: set[int] = set()
    for i in range(matrix.shape[0]):
        if matrix.shape[1] == 0:
            break
        j = int(np.argmax(matrix[i]))
        if not gts[j].care and matrix[i, j] >= DONT_CARE_IOU:
            out.add(i)
    return out


def match_polygons(preds: list[Polygon], gts: list[Polygon], iou_threshold: float,
                   resolution: int = 4,
                   matrix: np.ndarray | None = None) -> tuple[MatchResult, tuple[int, int, int]]:
    """One-threshold greedy matching with don't-care suppression.

    Returns the metrics plus (counted preds, counted gts, suppressed).
    """
    if not (0.0 < iou_threshold < 1.0):
        raise ValueError("iou_threshold must lie in (0, 1)")
    if matrix is None:
        matrix = iou_matrix(preds, gts, resolution)
    drop = _suppressed(matrix, gts)
    care_idx = [j for j, g in enumerate(gts) if g.care]
    kept_idx = [i for i in range(len(preds)) if i not in drop]
    candidates = [
        (float(matrix[i, j]), i, j)
        for i in kept_idx
        for j in care_idx
        if matrix[i, j] >= iou_threshold
    ]
    pairs = _greedy_match(candidates, best_first=True)
    counts = (len(kept_idx), len(care_idx), len(drop))
    return _prh(len(pairs), counts[0], counts[1], pairs), counts


def sweep(preds: list[Polygon], gts: list[Polygon],
          thresholds=DEFAULT_IOU_THRESHOLDS, resolution: int = 4) -> EvalReport:
    """Evaluate one prediction/GT set at several IoU thresholds."""
    if not thresholds:
        raise ValueError("at least one threshold required")
    matrix = iou_matrix(preds, gts, resolution)
    per: dict[float, MatchResult] = {}
    counts = (0, 0, 0)
    for t in thresholds:
        per[t], counts = match_polygons(preds, gts, t, resolution, matrix=matrix)
    lowest = min(thresholds)
    return EvalReport(per, list(per[lowest].pairs), counts)


def sweep_grouped(groups: list[tuple[list[Polygon], list[Polygon]]],
                  thresholds=DEFAULT_IOU_THRESHOLDS, resolution: int = 4) -> EvalReport:
    """Corpus-level sweep: match within each (preds, gts) group, pool the counts."""
    if not thresholds:
        raise ValueError("at least one threshold required")
    matrices = [iou_matrix(p, g, resolution) for p, g in groups]
    per: dict[float, MatchResult] = {}
    totals = (0, 0, 0)
    all_pairs_low: list[tuple[int, int, float]] = []
    for t in thresholds:
        matches = 0
        pairs: list[tuple[int, int, float]] = []
        np_, ng_, ns_ = 0, 0, 0
        for (preds, gts), matrix in zip(groups, matrices):
            result, counts = match_polygons(preds, gts, t, resolution, matrix=matrix)
            matches += result.matches
            pairs.extend(result.pairs)
            np_ += counts[0]
            ng_ += counts[1]
            ns_ += counts[2]
        per[t] = _prh(matches, np_, ng_, pairs)
        totals = (np_, ng_, ns_)
        if t == min(thresholds):
            all_pairs_low = pairs
    return EvalReport(per, all_pairs_low, totals)


def match_points(pred_points: list[Point2], gt_points: list[Point2],
                 dist: float) -> MatchResult:
    """Greedy one-to-one matching by ascending distance; 'within' is inclusive."""
    if dist <= 0:
        raise ValueError("dist must be > 0")
    candidates = []
    for i, p in enumerate(pred_points):
        for j, g in enumerate(gt_points):
            d = math.hypot(p.x - g.x, p.y - g.y)
            if d <= dist:
                candidates.append((d, i, j))
    pairs = _greedy_match(candidates, best_first=False)
    return _prh(len(pairs), len(pred_points), len(gt_points), pairs)


def sweep_points(pred_points: list[Point2], gt_points: list[Point2],
                 radii=DEFAULT_DIST_RADII) -> DistReport:
    return DistReport({float(d): match_points(pred_points, gt_points, d) for d in radii})


# --- serialization --------------------------------------------------------


def report_to_dict(report: EvalReport, dist: DistReport | None = None) -> dict:
    out = {
        "thresholds": {
            f"{t:g}": {"p": m.precision, "r": m.recall, "h": m.hmean, "matches": m.matches}
            for t, m in sorted(report.per_threshold.items())
        },
        "counts": {
            "predictions": report.counts[0],
            "ground_truths": report.counts[1],
            "dont_care_suppressed": report.counts[2],
        },
    }
    if dist is not None:
        out["dist"] = {
            f"{d:g}": {"p": m.precision, "r": m.recall, "h": m.hmean, "matches": m.matches}
            for d, m in sorted(dist.per_dist.items())
        }
    return out


def write_report(path, report: EvalReport, dist: DistReport | None = None) -> None:
    with open(path, "w") as f:
        json.dump(report_to_dict(report, dist), f, indent=2, sort_keys=True)
        f.write("\n")


def format_table(report: EvalReport, dist: DistReport | None = None,
                 label: str = "") -> str:
    lines = []
    header = f"{'IoU':>6}  {'P':>7}  {'R':>7}  {'H':>7}"
    if label:
        lines.append(label)
    lines.append(header)
    for t in sorted(report.per_threshold):
        m = report.per_threshold[t]
        lines.append(f"{t:>6.2f}  {m.precision:>7.3f}  {m.recall:>7.3f}  {m.hmean:>7.3f}")
    if dist is not None:
        lines.append(f"{'DIST':>6}  {'P':>7}  {'R':>7}  {'H':>7}")
        for d in sorted(dist.per_dist):
            m = dist.per_dist[d]
            lines.append(f"{d:>6.0f}  {m.precision:>7.3f}  {m.recall:>7.3f}  {m.hmean:>7.3f}")
    return "\n".join(lines)
