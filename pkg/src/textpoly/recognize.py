"""Recognition interface plus two deterministic reference recognizers.

Every consumer in the pipeline sees only a :class:`RecognitionResult`:
decoded text, per-character confidences, and a per-step attention matrix
over crop feature columns. Two implementations ship:

* :class:`OracleRecognizer` — test oracle whose confidence equals the
  exact IoU between the crop's source region and a registered ground
  truth, with indicator-shaped attention over true character spans.
* :class:`TemplateRecognizer` — normalized cross-correlation of glyph
  templates from a small built-in atlas against the binarized crop.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np
import shapely

from .errors import OracleUnregistered
from .geometry import Point2, Polygon
from .raster import GrayImage

CHARSET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"


@dataclass
class RecognitionResult:
    """Decoded text with per-character confidence and column attention.

    ``attention`` has len(text) + 1 rows (one per decode step including
    the end symbol); each row is a probability vector over
    ``feature_width`` columns.
    """

    text: str
    char_confidences: list[float]
    attention: np.ndarray
    feature_width: int

    def __post_init__(self):
        att = np.asarray(self.attention, dtype=float)
        if att.ndim != 2:
            raise ValueError("attention must be a 2-D matrix")
        if att.shape != (len(self.text) + 1, self.feature_width):
            raise ValueError(
                f"attention shape {att.shape} != ({len(self.text) + 1}, {self.feature_width})"
            )
        if len(self.char_confidences) != len(self.text):
            raise ValueError("one confidence per character required")
        if np.any(att < 0):
            raise ValueError("negative attention weight")
        if np.any(np.abs(att.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("attention rows must sum to 1")
        self.attention = att


class Recognizer(Protocol):
    def recognize(self, crop: GrayImage) -> RecognitionResult: ...


def aggregate_confidence(result: RecognitionResult) -> float:
    """Mean per-character confidence; 0 for an empty decode."""
    if not result.char_confidences:
        return 0.0
    return float(np.mean(result.char_confidences))


def attention_row(scores) -> list[float]:
    """Softmax over raw column scores (shift-invariant, order-preserving)."""
    arr = np.asarray(scores, dtype=float)
    if arr.size == 0:
        raise ValueError("empty score list")
    arr = arr - arr.max()
    e = np.exp(arr)
    return list(e / e.sum())


def _empty_result(width: int) -> RecognitionResult:
    w = max(1, int(width))
    return RecognitionResult("", [], np.full((1, w), 1.0 / w), w)


# --- oracle recognizer ----------------------------------------------------


def _to_shapely(poly: Polygon):
    g = shapely.Polygon(poly.as_array())
    if not g.is_valid:
        g = shapely.make_valid(g)
    return g


def exact_iou(a: Polygon, b: Polygon) -> float:
    """Exact polygon IoU (constructive geometry, not rasterization)."""
    ga, gb = _to_shapely(a), _to_shapely(b)
    inter = ga.intersection(gb).area
    if inter == 0.0:
        return 0.0
    union = ga.union(gb).area
    return float(inter / union) if union > 0 else 0.0


@dataclass
class _OracleEntry:
    polygon: Polygon
    text: str
    char_spans: list[tuple[float, float]]
    shape: object = field(init=False)

    def __post_init__(self):
        self.shape = _to_shapely(self.polygon)


class OracleRecognizer:
    """Placement-aware recognizer used as a test oracle.

    Confidence for each character equals the exact IoU between the
    crop's source region and the best-overlapping registered ground
    truth. Attention rows concentrate uniformly on the crop columns
    overlapping each character's horizontal span (uniform over all
    columns when a character does not overlap the crop).
    """

    def __init__(self):
        self._entries: list[_OracleEntry] = []

    def register(self, gt_polygon: Polygon, gt_text: str,
                 char_spans: list[tuple[float, float]] | None = None) -> None:
        """Register a ground truth; spans default to an equal split of the x-extent."""
        if not gt_text:
            raise ValueError("ground-truth text must be non-empty")
        if char_spans is None:
            x0, _, x1, _ = gt_polygon.bounds()
            n = len(gt_text)
            edges = np.linspace(x0, x1, n + 1)
            char_spans = [(float(edges[i]), float(edges[i + 1])) for i in range(n)]
        if len(char_spans) != len(gt_text):
            raise ValueError("one span per character required")
        self._entries.append(_OracleEntry(gt_polygon, gt_text, list(char_spans)))

    def recognize(self, crop: GrayImage) -> RecognitionResult:
        if not self._entries:
            raise OracleUnregistered("no ground truth registered")
        if crop.region is None:
            return _empty_result(crop.width)
        try:
            region = _to_shapely(crop.region)
        except Exception:
            return _empty_result(crop.width)
        best, best_iou = None, 0.0
        for entry in self._entries:
            inter = region.intersection(entry.shape).area
            if inter == 0.0:
                continue
            v = inter / region.union(entry.shape).area
            if v > best_iou:
                best, best_iou = entry, v
        if best is None or best_iou <= 0.0:
            return _empty_result(crop.width)
        n = len(best.text)
        w = crop.width
        rx0, _, rx1, _ = crop.region.bounds()
        col_w = (rx1 - rx0) / w
        att = np.zeros((n + 1, w))
        for t, (sx0, sx1) in enumerate(best.char_spans):
            cols = np.flatnonzero(
                (rx0 + np.arange(w) * col_w < sx1) & (rx0 + (np.arange(w) + 1) * col_w > sx0)
            )
            if cols.size:
                att[t, cols] = 1.0 / cols.size
            else:
                att[t, :] = 1.0 / w
        att[n, :] = 1.0 / w  # end symbol
        return RecognitionResult(best.text, [best_iou] * n, att, w)


# --- glyph atlas ----------------------------------------------------------

# 5x7 dot-matrix style; '#' is ink.
_FONT = {
    "A": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "C": (".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),
    "D": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "E": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "G": (".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "J": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "K": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "M": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "N": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "O": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "P": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "Q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "R": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "S": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "V": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "W": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"),
    "X": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "Y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "Z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
}


@dataclass
class GlyphAtlas:
    """Fixed-size binary glyph bitmaps keyed by character."""

    glyph_height: int
    glyph_width: int
    glyphs: dict[str, np.ndarray]

    def __post_init__(self):
        seen = {}
        for ch, bmp in self.glyphs.items():
            arr = np.asarray(bmp, dtype=bool)
            if arr.shape != (self.glyph_height, self.glyph_width):
                raise ValueError(f"glyph {ch!r} has shape {arr.shape}")
            key = arr.tobytes()
            if key in seen:
                raise ValueError(f"glyphs {seen[key]!r} and {ch!r} are identical")
            seen[key] = ch
            self.glyphs[ch] = arr

    @classmethod
    def from_json(cls, path) -> "GlyphAtlas":
        spec = json.loads(Path(path).read_text())
        glyphs = {ch: np.array(rows, dtype=bool) for ch, rows in spec["glyphs"].items()}
        return cls(int(spec["glyph_height"]), int(spec["glyph_width"]), glyphs)

    def to_json(self, path) -> None:
        payload = {
            "glyph_height": self.glyph_height,
            "glyph_width": self.glyph_width,
            "glyphs": {
                ch: self.glyphs[ch].astype(int).tolist() for ch in sorted(self.glyphs)
            },
        }
        Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def default_atlas() -> GlyphAtlas:
    """The embedded 5x7 A-Z / 0-9 atlas."""
    glyphs = {
        ch: np.array([[c == "#" for c in row] for row in rows])
        for ch, rows in _FONT.items()
    }
    return GlyphAtlas(7, 5, glyphs)


def scale_glyph_nn(bitmap: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor bitmap scaling: dst[i] = src[floor(i*src/dst)]."""
    src = np.asarray(bitmap)
    rows = (np.arange(out_h) * src.shape[0]) // out_h
    cols = (np.arange(out_w) * src.shape[1]) // out_w
    return src[np.ix_(rows, cols)]


# --- template recognizer --------------------------------------------------


def otsu_threshold(values: np.ndarray) -> float | None:
    """Otsu's threshold over a 256-bin histogram; None for constant input."""
    quant = np.clip(np.round(values * 255.0), 0, 255).astype(int)
    hist = np.bincount(quant.ravel(), minlength=256).astype(float)
    total = hist.sum()
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_t = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = (mu_t * omega - mu) ** 2 / (omega * (1.0 - omega))
    sigma_b[~np.isfinite(sigma_b)] = 0.0
    if sigma_b.max() <= 0.0:
        return None
    return float(np.argmax(sigma_b)) / 255.0


def _resize_bilinear(data: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Center-aligned bilinear resize (identity when sizes match)."""
    h, w = data.shape
    if (h, w) == (out_h, out_w):
        return data.copy()
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    a = data[np.ix_(y0, x0)]
    b = data[np.ix_(y0, x1)]
    c = data[np.ix_(y1, x0)]
    d = data[np.ix_(y1, x1)]
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy


class TemplateRecognizer:
    """Greedy left-to-right decoding by glyph-template correlation.

    The crop is resized to a canonical height of 32 (aspect preserved) and
    binarized at the Otsu threshold; each atlas glyph, scaled to the same
    height, slides across the columns. Decoding picks the best-correlating
    glyph above ``match_floor``, then advances by one glyph width.
    """

    CANONICAL_HEIGHT = 32

    def __init__(self, atlas: GlyphAtlas | None = None, match_floor: float = 0.6,
                 attention_sharpness: float = 16.0):
        self.atlas = atlas if atlas is not None else default_atlas()
        self.match_floor = match_floor
        self.attention_sharpness = attention_sharpness
        h = self.CANONICAL_HEIGHT
        self._glyph_w = max(1, round(self.atlas.glyph_width * h / self.atlas.glyph_height))
        self._chars = sorted(self.atlas.glyphs)
        stack = np.stack(
            [
                scale_glyph_nn(self.atlas.glyphs[ch], h, self._glyph_w).astype(float)
                for ch in self._chars
            ]
        )
        flat = stack.reshape(len(self._chars), -1)
        centered = flat - flat.mean(axis=1, keepdims=True)
        norms = np.linalg.norm(centered, axis=1)
        norms[norms == 0] = np.inf  # blank template can never match
        self._templates = centered / norms[:, None]

    def _correlations(self, mask: np.ndarray) -> np.ndarray:
        """NCC of every template at every column offset: (glyphs, positions)."""
        h, w = mask.shape
        gw = self._glyph_w
        windows = np.lib.stride_tricks.sliding_window_view(mask, (h, gw))
        flat = windows.reshape(-1, h * gw)  # (positions, n)
        n = flat.shape[1]
        sums = flat.sum(axis=1)
        sq = (flat * flat).sum(axis=1)
        var = sq - sums * sums / n
        denom = np.sqrt(np.maximum(var, 0.0))
        denom[denom <= 1e-12] = np.inf
        # template rows are zero-mean, so centering the windows is free
        numer = self._templates @ flat.T
        return np.clip(numer / denom[None, :], 0.0, 1.0)

    def _char_attention(self, corr_row: np.ndarray, out_w: int) -> np.ndarray:
        """Attention over crop columns for one decoded character.

        A column's score is the best correlation of any window covering
        it (sliding max over one glyph width), so the whole glyph span
        lights up; the sharpened softmax then concentrates enough mass on
        that span for threshold binarization to fire.
        """
        gw = self._glyph_w
        padded = np.full(out_w + gw - 1, -np.inf)
        padded[gw - 1 : gw - 1 + len(corr_row)] = corr_row
        col_scores = np.lib.stride_tricks.sliding_window_view(padded, gw).max(axis=1)
        return np.array(attention_row(self.attention_sharpness * col_scores))

    def recognize(self, crop: GrayImage) -> RecognitionResult:
        h = self.CANONICAL_HEIGHT
        fallback_w = max(1, round(crop.width * h / crop.height))
        thresh0 = otsu_threshold(crop.data)
        if thresh0 is None:
            return _empty_result(fallback_w)
        # Normalize to the ink's vertical extent: anchors are rarely
        # height-tight, and glyphs must fill the canonical height for the
        # templates to correlate.
        rows = np.flatnonzero((crop.data > thresh0).any(axis=1))
        band = crop.data[rows[0] : rows[-1] + 1]
        out_w = max(1, round(crop.width * h / band.shape[0]))
        resized = _resize_bilinear(band, h, out_w)
        thresh = otsu_threshold(resized)
        if thresh is None or out_w < self._glyph_w:
            return _empty_result(out_w)
        mask = (resized > thresh).astype(float)
        corr = self._correlations(mask)
        positions = corr.shape[1]
        chars: list[str] = []
        confs: list[float] = []
        rows: list[np.ndarray] = []
        covered = np.zeros(out_w, dtype=bool)
        col_best = corr.max(axis=0)
        x = 0
        while x < positions:
            if col_best[x] >= self.match_floor:
                # Snap to the local correlation peak so glyph-pitch drift
                # (resize rounding) cannot walk the decoder off target.
                window = col_best[x : min(x + 5, positions)]
                peak = x + int(np.argmax(window))
                g = int(np.argmax(corr[:, peak]))
                chars.append(self._chars[g])
                confs.append(float(corr[g, peak]))
                rows.append(self._char_attention(corr[g, :], out_w))
                covered[peak : peak + self._glyph_w] = True
                x = peak + max(1, self._glyph_w - 3)
            else:
                x += 1
        if not chars:
            return _empty_result(out_w)
        # Scale confidences by the fraction of ink the decode explains (a
        # crop decoding one clean glyph out of many scores poorly) and by
        # the vertical fill (sqrt-softened), so selection and refinement
        # prefer boxes that cover whole words without vertical slack.
        ink_per_col = mask.sum(axis=0)
        total_ink = ink_per_col.sum()
        if total_ink > 0:
            coverage = float(ink_per_col[covered].sum() / total_ink)
            v_fill = math.sqrt(band.shape[0] / crop.height) if crop.height > 0 else 1.0
            confs = [c * coverage * min(1.0, v_fill) for c in confs]
        att = np.vstack(rows + [np.full((1, out_w), 1.0 / out_w)])
        return RecognitionResult("".join(chars), confs, att, out_w)
