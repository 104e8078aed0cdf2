"""Synthetic scene-text rendering with exact ground truth.

Scenes are black canvases with atlas glyphs blitted along horizontal,
rotated, or sinusoidally curved baselines. Every instance comes with a
20-point boundary polygon guaranteed to contain all its glyph pixels, the
polygon centroid as its annotation point, and per-character spans along
the baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InstanceOutOfCanvas, UnknownCharacter
from .geometry import Point2, Polygon, centroid
from .raster import GrayImage
from .recognize import CHARSET, GlyphAtlas, default_atlas, scale_glyph_nn

_NUM_SAMPLES = 10  # boundary samples per contour


@dataclass(frozen=True)
class Horizontal:
    pass


@dataclass(frozen=True)
class Rotated:
    angle: float  # radians, about the instance origin


@dataclass(frozen=True)
class Curved:
    amplitude: float  # pixels
    period: float  # pixels along the baseline


Baseline = Horizontal | Rotated | Curved


@dataclass
class TextInstance:
    text: str
    baseline: Baseline
    origin: Point2  # top-left of the first glyph
    glyph_scale: float = 1.0

    def __post_init__(self):
        if not self.text:
            raise ValueError("instance text must be non-empty")
        if self.glyph_scale <= 0:
            raise ValueError("glyph_scale must be > 0")


@dataclass
class SceneSpec:
    canvas: tuple[int, int]  # (width, height)
    instances: list[TextInstance]
    noise_sigma: float = 0.0
    rng_seed: int = 0


@dataclass
class GroundTruth:
    polygon: Polygon
    center: Point2
    text: str
    char_spans: list[tuple[float, float]]


def _char_layout(inst: TextInstance, atlas: GlyphAtlas):
    """Integer glyph size plus per-character (x, dy) offsets and spans."""
    gh, gw = atlas.glyph_height, atlas.glyph_width
    ch = max(1, round(gh * inst.glyph_scale))
    cw = max(1, round(gw * inst.glyph_scale))
    n = len(inst.text)
    dys = np.zeros(n)
    if isinstance(inst.baseline, Curved):
        arcs = (np.arange(n) + 0.5) * cw
        dys = inst.baseline.amplitude * np.sin(2 * math.pi * arcs / inst.baseline.period)
    xs = np.arange(n) * cw
    spans = [(float(k * cw) - 0.5, float((k + 1) * cw) - 0.5) for k in range(n)]
    return ch, cw, xs, dys, spans


def _envelope_polygon(boxes: list[tuple[float, float, float, float]]) -> Polygon:
    """10+10 point hull of abutting char boxes, conservative at offset steps.

    Each sample takes the extreme top/bottom over every box intersecting
    the window spanned by its neighbors, so linear edges between samples
    never cut into a box.
    """
    x_min = min(b[0] for b in boxes)
    x_max = max(b[2] for b in boxes)
    xs = np.linspace(x_min, x_max, _NUM_SAMPLES)
    upper, lower = [], []
    for i, x in enumerate(xs):
        lo = xs[max(0, i - 1)]
        hi = xs[min(_NUM_SAMPLES - 1, i + 1)]
        tops = [b[1] for b in boxes if b[0] <= hi and b[2] >= lo]
        bots = [b[3] for b in boxes if b[0] <= hi and b[2] >= lo]
        upper.append(Point2(float(x), float(min(tops))))
        lower.append(Point2(float(x), float(max(bots))))
    return Polygon(tuple(upper) + tuple(reversed(lower)))


def _rotate_points(points, pivot: Point2, angle: float):
    c, s = math.cos(angle), math.sin(angle)
    out = []
    for p in points:
        dx, dy = p.x - pivot.x, p.y - pivot.y
        out.append(Point2(pivot.x + c * dx - s * dy, pivot.y + s * dx + c * dy))
    return out


def instance_ground_truth(inst: TextInstance, atlas: GlyphAtlas) -> GroundTruth:
    """Ground truth for one instance, independent of the canvas."""
    ch, cw, xs, dys, spans = _char_layout(inst, atlas)
    ox, oy = round(inst.origin.x), round(inst.origin.y)
    boxes = [
        (ox + float(x) - 0.5, oy + float(round(dy)) - 0.5,
         ox + float(x) + cw - 0.5, oy + float(round(dy)) + ch - 0.5)
        for x, dy in zip(xs, dys)
    ]
    poly = _envelope_polygon(boxes)
    if isinstance(inst.baseline, Rotated):
        poly = Polygon(tuple(_rotate_points(poly.vertices, inst.origin, inst.baseline.angle)))
    image_spans = [(ox + s0, ox + s1) for s0, s1 in spans]
    return GroundTruth(poly, centroid(poly), inst.text, image_spans)


def _blit(canvas: np.ndarray, mask: np.ndarray, x0: int, y0: int) -> None:
    h, w = mask.shape
    if x0 < 0 or y0 < 0 or x0 + w > canvas.shape[1] or y0 + h > canvas.shape[0]:
        raise InstanceOutOfCanvas(f"glyph block at ({x0}, {y0}) size {w}x{h}")
    region = canvas[y0 : y0 + h, x0 : x0 + w]
    np.maximum(region, mask.astype(float), out=region)


def _render_instance(canvas: np.ndarray, inst: TextInstance, atlas: GlyphAtlas) -> None:
    ch, cw, xs, dys, _ = _char_layout(inst, atlas)
    for c in inst.text:
        if c.upper() not in atlas.glyphs:
            raise UnknownCharacter(repr(c))
    glyphs = {c: scale_glyph_nn(atlas.glyphs[c.upper()], ch, cw) for c in set(inst.text)}
    ox, oy = round(inst.origin.x), round(inst.origin.y)

    if not isinstance(inst.baseline, Rotated):
        for c, x, dy in zip(inst.text, xs, dys):
            _blit(canvas, glyphs[c], ox + int(x), oy + int(round(dy)))
        return

    # Rotated: build the flat layout, then inverse-rotate pixel centers into it.
    layout = np.zeros((ch, cw * len(inst.text)), dtype=bool)
    for c, x in zip(inst.text, xs):
        layout[:, int(x) : int(x) + cw] = glyphs[c]
    gt = instance_ground_truth(inst, atlas)
    bx0, by0, bx1, by1 = gt.polygon.bounds()
    px0, py0 = math.floor(bx0), math.floor(by0)
    px1, py1 = math.ceil(bx1), math.ceil(by1)
    if px0 < 0 or py0 < 0 or px1 > canvas.shape[1] - 1 or py1 > canvas.shape[0] - 1:
        raise InstanceOutOfCanvas(f"rotated instance spans ({px0},{py0})-({px1},{py1})")
    gx, gy = np.meshgrid(np.arange(px0, px1 + 1), np.arange(py0, py1 + 1))
    c, s = math.cos(-inst.baseline.angle), math.sin(-inst.baseline.angle)
    dx = gx - inst.origin.x
    dy_ = gy - inst.origin.y
    qx = np.round(inst.origin.x + c * dx - s * dy_).astype(int) - ox
    qy = np.round(inst.origin.y + s * dx + c * dy_).astype(int) - oy
    valid = (qx >= 0) & (qx < layout.shape[1]) & (qy >= 0) & (qy < layout.shape[0])
    ink = np.zeros_like(valid)
    ink[valid] = layout[qy[valid], qx[valid]]
    region = canvas[py0 : py1 + 1, px0 : px1 + 1]
    np.maximum(region, ink.astype(float), out=region)


def render(spec: SceneSpec, atlas: GlyphAtlas | None = None) -> tuple[GrayImage, list[GroundTruth]]:
    """Render a scene; deterministic given ``spec.rng_seed``."""
    atlas = atlas if atlas is not None else default_atlas()
    w, h = spec.canvas
    canvas = np.zeros((h, w))
    truths = []
    for inst in spec.instances:
        gt = instance_ground_truth(inst, atlas)
        bx0, by0, bx1, by1 = gt.polygon.bounds()
        if bx0 < 0 or by0 < 0 or bx1 > w - 1 or by1 > h - 1:
            raise InstanceOutOfCanvas(
                f"instance {inst.text!r} polygon spans ({bx0:.1f},{by0:.1f})-({bx1:.1f},{by1:.1f})"
            )
        _render_instance(canvas, inst, atlas)
        truths.append(gt)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        canvas = canvas + rng.normal(0.0, spec.noise_sigma, canvas.shape)
    return GrayImage(np.clip(canvas, 0.0, 1.0)), truths


# --- corpus generation ----------------------------------------------------

PROFILES = ("horizontal", "mixed", "curved")


def _draw_instance(rng: np.random.Generator, canvas: tuple[int, int], profile: str,
                   atlas: GlyphAtlas, placed: list[tuple[float, float, float, float]]):
    """Sample one instance that fits the canvas and avoids placed boxes."""
    w, h = canvas
    chars = list(CHARSET)
    for _ in range(40):
        n = int(rng.integers(2, 6))
        text = "".join(rng.choice(chars, n))
        scale = float(rng.uniform(2.0, 4.0))
        ch = round(atlas.glyph_height * scale)
        cw = round(atlas.glyph_width * scale)
        width = cw * n
        if profile == "horizontal":
            baseline: Baseline = Horizontal()
        elif profile == "curved":
            baseline = Curved(float(rng.uniform(2.0, max(2.5, 0.35 * ch))),
                              float(rng.uniform(1.0, 2.0)) * width)
        else:
            kind = rng.choice(["horizontal", "rotated", "curved"], p=[0.5, 0.3, 0.2])
            if kind == "horizontal":
                baseline = Horizontal()
            elif kind == "rotated":
                baseline = Rotated(float(rng.uniform(-0.45, 0.45)))
            else:
                baseline = Curved(float(rng.uniform(2.0, max(2.5, 0.35 * ch))),
                                  float(rng.uniform(1.0, 2.0)) * width)
        probe = TextInstance(text, baseline, Point2(0.0, 0.0), scale)
        rel = instance_ground_truth(probe, atlas).polygon.bounds()
        margin = 2.0
        x_lo, x_hi = margin - rel[0], (w - 1 - margin) - rel[2]
        y_lo, y_hi = margin - rel[1], (h - 1 - margin) - rel[3]
        if x_hi <= x_lo or y_hi <= y_lo:
            continue
        origin = Point2(float(rng.uniform(x_lo, x_hi)), float(rng.uniform(y_lo, y_hi)))
        box = (rel[0] + origin.x, rel[1] + origin.y, rel[2] + origin.x, rel[3] + origin.y)
        pad = 4.0
        clear = all(
            box[2] + pad < b[0] or b[2] + pad < box[0] or box[3] + pad < b[1] or b[3] + pad < box[1]
            for b in placed
        )
        if not clear:
            continue
        placed.append(box)
        return TextInstance(text, baseline, origin, scale)
    return None


def make_corpus(count: int, profile: str, rng_seed: int,
                noise_sigma: float = 0.0, canvas: tuple[int, int] = (240, 160),
                max_instances: int = 2, atlas: GlyphAtlas | None = None
                ) -> list[tuple[GrayImage, list[GroundTruth]]]:
    """Deterministic list of rendered scenes (seed_i = rng_seed XOR i)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    atlas = atlas if atlas is not None else default_atlas()
    scenes = []
    for i in range(count):
        seed = rng_seed ^ i
        rng = np.random.default_rng(seed)
        n_inst = int(rng.integers(1, max_instances + 1))
        placed: list[tuple[float, float, float, float]] = []
        instances = []
        for _ in range(n_inst):
            inst = _draw_instance(rng, canvas, profile, atlas, placed)
            if inst is not None:
                instances.append(inst)
        if not instances:  # pathological seeds: fall back to a centered word
            instances = [TextInstance("A", Horizontal(),
                                      Point2(canvas[0] / 2, canvas[1] / 2), 2.0)]
        spec = SceneSpec(canvas, instances, noise_sigma=noise_sigma, rng_seed=seed)
        scenes.append(render(spec, atlas))
    return scenes
