"""Grayscale rasters: bilinear sampling, cropping, PGM file IO, SVG overlays.

Intensities are kept as floats in [0, 1] and quantized to 8 bits only when
a file is written. Out-of-bounds samples clamp to the border so regions
hanging over an image edge are padded with edge pixels, not black.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateRect, FormatError
from .geometry import Polygon, Rect, rect_to_polygon


@dataclass
class GrayImage:
    """Immutable 2-D raster with intensities in [0, 1].

    ``region`` records which image-space region this raster was resampled
    from (set by cropping/warping); the oracle recognizer relies on it.
    """

    data: np.ndarray
    region: Polygon | None = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected 2-D raster, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite intensities")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("intensities outside [0, 1]")
        arr.setflags(write=False)
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def sample_bilinear(img: GrayImage, x: float, y: float) -> float:
    """Bilinear interpolation with border clamping; exact at integer coords."""
    return float(sample_bilinear_many(img, np.array([x]), np.array([y]))[0])


def sample_bilinear_many(img: GrayImage, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sample_bilinear` over coordinate arrays."""
    h, w = img.data.shape
    x = np.clip(np.asarray(xs, dtype=float), 0.0, w - 1.0)
    y = np.clip(np.asarray(ys, dtype=float), 0.0, h - 1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    d = img.data
    top = d[y0, x0] * (1 - fx) + d[y0, x1] * fx
    bot = d[y1, x0] * (1 - fx) + d[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def crop_axis_aligned(img: GrayImage, rect: Rect) -> GrayImage:
    """Sub-raster covered by ``rect``, resampled at integer pitch.

    Output size is round(width) x round(height) (each at least 1) and the
    rect is not shrunk at image borders; overhanging samples clamp.
    """
    if rect.angle != 0.0:
        raise ValueError("crop_axis_aligned requires an axis-aligned rect")
    x_left = rect.cx - rect.width / 2.0
    y_top = rect.cy - rect.height / 2.0
    overlap_x = min(rect.cx + rect.width / 2.0, img.width - 1.0) - max(x_left, 0.0)
    overlap_y = min(rect.cy + rect.height / 2.0, img.height - 1.0) - max(y_top, 0.0)
    if overlap_x <= 0 or overlap_y <= 0:
        raise DegenerateRect(f"rect {rect} clips to zero area")
    out_w = max(1, round(rect.width))
    out_h = max(1, round(rect.height))
    xs, ys = np.meshgrid(x_left + np.arange(out_w), y_top + np.arange(out_h))
    values = sample_bilinear_many(img, xs, ys)
    return GrayImage(np.clip(values, 0.0, 1.0), region=rect_to_polygon(rect))


# --- PGM (portable graymap) IO ------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens = []
    pos = 0
    for _ in range(count):
        m = _TOKEN.match(buf, pos)
        if not m:
            raise FormatError("truncated header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def read_image(path) -> GrayImage:
    """Read a PGM file (plain P2 or raw P5, maxval up to 255)."""
    raw = Path(path).read_bytes()
    (magic,), pos = _read_tokens(raw, 1)
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})")
    dims, pos2 = _read_tokens(raw[pos:], 3)
    pos += pos2
    try:
        width, height, maxval = (int(t) for t in dims)
    except ValueError as exc:
        raise FormatError(f"bad header fields {dims}") from exc
    if width < 1 or height < 1 or not (1 <= maxval <= 255):
        raise FormatError(f"bad dimensions {width}x{height} maxval {maxval}")
    n = width * height
    if magic == b"P5":
        body = raw[pos + 1 : pos + 1 + n]  # single whitespace byte after maxval
        if len(body) != n:
            raise FormatError("truncated raster")
        values = np.frombuffer(body, dtype=np.uint8).astype(float)
    else:
        fields = raw[pos:].split()
        if len(fields) < n:
            raise FormatError("truncated raster")
        try:
            values = np.array([int(f) for f in fields[:n]], dtype=float)
        except ValueError as exc:
            raise FormatError("non-integer sample") from exc
    if values.max(initial=0) > maxval:
        raise FormatError("sample exceeds maxval")
    return GrayImage((values / maxval).reshape(height, width))


def write_image(img: GrayImage, path) -> None:
    """Write a raw (P5) PGM with maxval 255."""
    quant = np.clip(np.round(img.data * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + quant.tobytes())


# --- SVG overlay emission ------------------------------------------------

_COLOR_MAP = {"green": "#00a000", "blue": "#2060ff", "red": "#e02020"}


@dataclass
class OverlayScene:
    """Base raster plus stroked polygon layers for inspection output."""

    base: GrayImage
    layers: list[tuple[Polygon, str, str]] = field(default_factory=list)


def _raster_rects(img: GrayImage) -> list[str]:
    """Raster as row-run rectangles over a single background rect.

    Runs of the most common 8-bit value collapse into the background,
    which keeps noise-free scenes compact while staying renderable in any
    SVG viewer.
    """
    quant = np.clip(np.round(img.data * 255.0), 0, 255).astype(np.uint8)
    bg = int(np.bincount(quant.ravel(), minlength=256).argmax())
    parts = [
        f'<rect x="-0.5" y="-0.5" width="{img.width}" height="{img.height}" '
        f'fill="{_gray(bg)}"/>'
    ]
    for r in range(img.height):
        row = quant[r]
        breaks = np.flatnonzero(np.diff(row)) + 1
        starts = np.concatenate(([0], breaks))
        ends = np.concatenate((breaks, [img.width]))
        for s, e in zip(starts, ends):
            v = int(row[s])
            if v == bg:
                continue
            parts.append(
                f'<rect x="{s - 0.5}" y="{r - 0.5}" width="{e - s}" height="1" '
                f'fill="{_gray(v)}"/>'
            )
    return parts


def _gray(v: int) -> str:
    return f"#{v:02x}{v:02x}{v:02x}"


def emit_overlay_svg(scene: OverlayScene, path, include_raster: bool = True) -> None:
    """Write an SVG: raster group first (optional), then one closed path per layer."""
    w, h = scene.base.width, scene.base.height
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * 3}" height="{h * 3}" '
        f'viewBox="-0.5 -0.5 {w} {h}">',
    ]
    if include_raster:
        lines.append('<g shape-rendering="crispEdges">')
        lines.extend(_raster_rects(scene.base))
        lines.append("</g>")
    for poly, color, label in scene.layers:
        pts = poly.as_array()
        d = "M " + " L ".join(f"{x:.2f},{y:.2f}" for x, y in pts) + " Z"
        stroke = _COLOR_MAP.get(color, color)
        lines.append(
            f'<path d="{d}" fill="none" stroke="{stroke}" stroke-width="0.8"/>'
        )
        if label:
            x0, y0 = pts[0]
            lines.append(
                f'<text x="{x0:.2f}" y="{y0 - 1:.2f}" font-size="5" '
                f'fill="{stroke}">{_xml_escape(label)}</text>'
            )
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
