"""Scribble synthesis: templates, palette, fitting, and rasterization.

A scribble starts as a template with geometry normalized to the unit
square. Fitting picks a color/thickness and an affine transform that drops
the template around an anchor region; rendering strokes the transformed
polylines into an image with round caps and joins.

Colors come from a fixed high-saturation palette whose channel values sit
on the lattice {16, 128, 240}, so any two distinct palette colors are at
Chebyshev distance >= 112. That keeps co-occurring scribbles separable
without per-draw feasibility search.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .images import RGB, BBox, ImageBuffer
from .rng import Rng

COLOR_DISTANCE_MIN = 96

PALETTE: tuple[tuple[str, RGB], ...] = (
    ("red", (240, 16, 16)),
    ("orange", (240, 128, 16)),
    ("yellow", (240, 240, 16)),
    ("lime", (128, 240, 16)),
    ("green", (16, 240, 16)),
    ("cyan", (16, 240, 240)),
    ("blue", (16, 16, 240)),
    ("purple", (128, 16, 240)),
    ("magenta", (240, 16, 240)),
    ("pink", (240, 128, 240)),
)

_NAME_BY_COLOR = {rgb: name for name, rgb in PALETTE}


class ScribbleError(ValueError):
    pass


class PaletteExhaustedError(ScribbleError):
    pass


class AnchorTooSmallError(ScribbleError):
    pass


def chebyshev(a: RGB, b: RGB) -> int:
    return max(abs(int(x) - int(y)) for x, y in zip(a, b))


def color_name(color: RGB) -> str:
    try:
        return _NAME_BY_COLOR[tuple(int(c) for c in color)]
    except KeyError:
        raise ScribbleError(f"{color} is not a palette color") from None


def sample_color(rng: Rng, excluded: Iterable[RGB] = ()) -> RGB:
    """Draw a palette color at Chebyshev distance >= 96 from every excluded color."""
    excluded = [tuple(int(c) for c in e) for e in excluded]
    feasible = [
        rgb
        for _, rgb in PALETTE
        if all(chebyshev(rgb, e) >= COLOR_DISTANCE_MIN for e in excluded)
    ]
    if not feasible:
        raise PaletteExhaustedError(f"no palette color clears {len(excluded)} exclusions")
    return rng.choice(feasible)


@dataclass(frozen=True)
class Polyline:
    points: tuple[tuple[float, float], ...]
    closed: bool = False

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ScribbleError("polyline needs at least 2 points")
        for x, y in self.points:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ScribbleError(f"template point ({x}, {y}) outside [0,1]^2")


@dataclass(frozen=True)
class ScribbleTemplate:
    id: str
    kind: str  # rectangle | ellipse | freehand
    polylines: tuple[Polyline, ...]


def _rectangle_template() -> ScribbleTemplate:
    pts = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    return ScribbleTemplate("rectangle", "rectangle", (Polyline(pts, closed=True),))


def _ellipse_template(n: int = 40) -> ScribbleTemplate:
    pts = tuple(
        (0.5 + 0.5 * math.cos(2 * math.pi * i / n), 0.5 + 0.5 * math.sin(2 * math.pi * i / n))
        for i in range(n)
    )
    return ScribbleTemplate("ellipse", "ellipse", (Polyline(pts, closed=True),))


def _load_preset(text: str) -> ScribbleTemplate:
    raw = json.loads(text)
    polys = tuple(
        Polyline(tuple((float(x), float(y)) for x, y in p["points"]), bool(p.get("closed", False)))
        for p in raw["polylines"]
    )
    return ScribbleTemplate(raw["id"], raw.get("kind", "freehand"), polys)


def load_templates() -> dict[str, ScribbleTemplate]:
    """Geometric primitives plus the bundled hand-drawn presets."""
    out = {t.id: t for t in (_rectangle_template(), _ellipse_template())}
    root = resources.files("scribbleforge").joinpath("data", "templates")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            t = _load_preset(entry.read_text(encoding="utf-8"))
            out[t.id] = t
    return out


_TEMPLATES: dict[str, ScribbleTemplate] | None = None


def template_library() -> dict[str, ScribbleTemplate]:
    global _TEMPLATES
    if _TEMPLATES is None:
        _TEMPLATES = load_templates()
    return _TEMPLATES


@dataclass(frozen=True)
class ScribbleSpec:
    """A placed scribble: template, color, thickness, and unit-square -> canvas affine."""

    template_id: str
    color: RGB
    thickness: int
    transform: tuple[float, float, float, float, float, float]  # (a, b, tx, c, d, ty)
    jitter_seed: int

    def __post_init__(self) -> None:
        if self.thickness < 1:
            raise ScribbleError(f"thickness must be >= 1, got {self.thickness}")

    def to_json(self) -> dict:
        return {
            "template_id": self.template_id,
            "color": list(self.color),
            "thickness": self.thickness,
            "transform": list(self.transform),
            "jitter_seed": self.jitter_seed,
        }

    @staticmethod
    def from_json(raw: dict) -> "ScribbleSpec":
        return ScribbleSpec(
            template_id=raw["template_id"],
            color=tuple(raw["color"]),
            thickness=int(raw["thickness"]),
            transform=tuple(float(v) for v in raw["transform"]),
            jitter_seed=int(raw["jitter_seed"]),
        )

    def with_color(self, color: RGB) -> "ScribbleSpec":
        return replace(self, color=tuple(int(c) for c in color))


@dataclass(frozen=True)
class FitConfig:
    margin: float = 0.12  # anchor dilation per side, relative to anchor size
    scale_jitter: float = 0.15
    rotation_jitter_deg: float = 10.0
    center_jitter: float = 0.10
    thickness_range: tuple[int, int] = (2, 6)
    excluded_colors: tuple[RGB, ...] = field(default_factory=tuple)


def _anchor_bbox(anchor: BBox | Sequence[tuple[float, float]]) -> BBox:
    if isinstance(anchor, BBox):
        return anchor
    pts = list(anchor)
    if len(pts) < 2:
        raise ScribbleError("contour anchor needs at least 2 points")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    w = max(1, int(math.ceil(max(xs) - min(xs))))
    h = max(1, int(math.ceil(max(ys) - min(ys))))
    return BBox(int(math.floor(min(xs))), int(math.floor(min(ys))), w, h)


def fit_template(
    template: ScribbleTemplate,
    anchor: BBox | Sequence[tuple[float, float]],
    rng: Rng,
    config: FitConfig = FitConfig(),
) -> ScribbleSpec:
    """Place ``template`` around ``anchor`` with randomized scale/rotation/offset.

    With all jitter ranges at zero the template's unit square maps exactly to
    the anchor box dilated by ``margin`` per side.
    """
    box = _anchor_bbox(anchor)
    if min(box.w, box.h) < 2 * config.thickness_range[0]:
        raise AnchorTooSmallError(
            f"anchor {box.w}x{box.h} cannot host a stroke of thickness >= {config.thickness_range[0]}"
        )

    sx = box.w * (1.0 + 2.0 * config.margin)
    sy = box.h * (1.0 + 2.0 * config.margin)
    scale = 1.0 + rng.uniform(-config.scale_jitter, config.scale_jitter)
    sx *= scale
    sy *= scale
    theta = math.radians(rng.uniform(-config.rotation_jitter_deg, config.rotation_jitter_deg))
    cx, cy = box.center
    cx += rng.uniform(-config.center_jitter, config.center_jitter) * box.w
    cy += rng.uniform(-config.center_jitter, config.center_jitter) * box.h

    cos_t, sin_t = math.cos(theta), math.sin(theta)
    # translate(center) . rotate(theta) . scale(sx, sy) . translate(-1/2)
    a = cos_t * sx
    b = -sin_t * sy
    c = sin_t * sx
    d = cos_t * sy
    tx = cx - (a * 0.5 + b * 0.5)
    ty = cy - (c * 0.5 + d * 0.5)

    color = sample_color(rng, config.excluded_colors)
    lo, hi = config.thickness_range
    thickness = rng.integers(lo, hi + 1)
    return ScribbleSpec(
        template_id=template.id,
        color=color,
        thickness=thickness,
        transform=(a, b, tx, c, d, ty),
        jitter_seed=rng.bits64(),
    )


def transform_points(
    spec: ScribbleSpec, points: Sequence[tuple[float, float]]
) -> list[tuple[float, float]]:
    a, b, tx, c, d, ty = spec.transform
    return [(a * x + b * y + tx, c * x + d * y + ty) for x, y in points]


def _wobble(points: list[tuple[float, float]], seed: int, amplitude: float) -> list[tuple[float, float]]:
    if amplitude <= 0:
        return points
    gen = Rng(seed & (2**64 - 1), "wobble")
    noise = gen.normal(size=(len(points), 2)) * amplitude
    return [(x + float(nx), y + float(ny)) for (x, y), (nx, ny) in zip(points, noise)]


def scribble_geometry(
    spec: ScribbleSpec, templates: dict[str, ScribbleTemplate] | None = None
) -> list[list[tuple[float, float]]]:
    """Canvas-space polylines for ``spec`` (closed loops get their closing point)."""
    templates = templates or template_library()
    if spec.template_id not in templates:
        raise ScribbleError(f"unknown template {spec.template_id!r}")
    template = templates[spec.template_id]
    out = []
    for i, poly in enumerate(template.polylines):
        pts = transform_points(spec, poly.points)
        if template.kind == "freehand":
            # Hand wobble keeps repeated uses of one preset from looking cloned;
            # amplitude is capped well under the stroke-locality slack of 1 px.
            pts = _wobble(pts, spec.jitter_seed + i, amplitude=0.6)
        if poly.closed:
            pts = pts + [pts[0]]
        out.append(pts)
    return out


def _segment_mask(mask: np.ndarray, p: tuple[float, float], q: tuple[float, float], radius: float) -> None:
    h, w = mask.shape
    x0 = max(0, int(math.floor(min(p[0], q[0]) - radius - 1)))
    x1 = min(w - 1, int(math.ceil(max(p[0], q[0]) + radius + 1)))
    y0 = max(0, int(math.floor(min(p[1], q[1]) - radius - 1)))
    y1 = min(h - 1, int(math.ceil(max(p[1], q[1]) + radius + 1)))
    if x0 > x1 or y0 > y1:
        return
    ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    px, py = p
    vx, vy = q[0] - px, q[1] - py
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0:
        d2 = (xs - px) ** 2 + (ys - py) ** 2
    else:
        t = ((xs - px) * vx + (ys - py) * vy) / seg_len2
        t = np.clip(t, 0.0, 1.0)
        d2 = (xs - (px + t * vx)) ** 2 + (ys - (py + t * vy)) ** 2
    mask[y0 : y1 + 1, x0 : x1 + 1] |= d2 <= radius * radius


def stroke_mask(
    spec: ScribbleSpec,
    width: int,
    height: int,
    templates: dict[str, ScribbleTemplate] | None = None,
) -> np.ndarray:
    """Boolean coverage of the stroke: pixels within thickness/2 of the geometry."""
    mask = np.zeros((height, width), dtype=bool)
    radius = spec.thickness / 2.0
    for pts in scribble_geometry(spec, templates):
        for p, q in zip(pts[:-1], pts[1:]):
            _segment_mask(mask, p, q, radius)
    return mask


def strokes_mask(
    strokes: Sequence[tuple[Sequence[tuple[float, float]], int]], width: int, height: int
) -> np.ndarray:
    """Coverage for raw (points, thickness) strokes, e.g. reviewer-drawn ones."""
    mask = np.zeros((height, width), dtype=bool)
    for points, thickness in strokes:
        pts = list(points)
        if len(pts) == 1:
            pts = pts * 2
        radius = max(1, int(thickness)) / 2.0
        for p, q in zip(pts[:-1], pts[1:]):
            _segment_mask(mask, (float(p[0]), float(p[1])), (float(q[0]), float(q[1])), radius)
    return mask


def render_scribble(
    image: ImageBuffer,
    spec: ScribbleSpec,
    templates: dict[str, ScribbleTemplate] | None = None,
) -> ImageBuffer:
    """Stroke the scribble into a copy of ``image``, fully opaque."""
    mask = stroke_mask(spec, image.width, image.height, templates)
    out = image.writable_copy()
    out[mask] = (*spec.color, 255)
    return ImageBuffer(out)


def render_strokes(
    image: ImageBuffer,
    strokes: Sequence[tuple[Sequence[tuple[float, float]], RGB, int]],
) -> ImageBuffer:
    out = image.writable_copy()
    for points, color, thickness in strokes:
        mask = strokes_mask([(points, thickness)], image.width, image.height)
        out[mask] = (*color, 255)
    return ImageBuffer(out)


def add_distractors(
    image: ImageBuffer,
    n: int,
    valid_color: RGB,
    rng: Rng,
    config: FitConfig = FitConfig(),
) -> tuple[ImageBuffer, list[ScribbleSpec]]:
    """Overlay ``n`` scribbles at random placements, colors distinct from ``valid_color``."""
    if not 1 <= n <= 3:
        raise ScribbleError(f"distractor count must be in [1, 3], got {n}")
    templates = template_library()
    names = sorted(templates)
    taken: list[RGB] = [tuple(valid_color)]
    out = image
    specs: list[ScribbleSpec] = []
    for _ in range(n):
        template = templates[rng.choice(names)]
        w = max(8, int(image.width * rng.uniform(0.12, 0.30)))
        h = max(8, int(image.height * rng.uniform(0.12, 0.30)))
        x = rng.integers(0, max(1, image.width - w))
        y = rng.integers(0, max(1, image.height - h))
        cfg = replace(config, excluded_colors=tuple(taken))
        spec = fit_template(template, BBox(x, y, w, h), rng, cfg)
        taken.append(spec.color)
        out = render_scribble(out, spec, templates)
        specs.append(spec)
    return out, specs
