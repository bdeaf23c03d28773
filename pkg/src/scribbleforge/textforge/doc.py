"""Deterministic paragraph layout, rendering, and source-string edits.

Layout model: a block of pre-wrapped lines at a fixed origin; line ``i``
occupies the horizontal band ``origin_y + i*line_height``. Glyphs advance
left to right with per-glyph styling (size, weight, color, spacing,
shadow) resolved from the doc typography plus any style spans. All
arithmetic is integer or float64-with-half-up-rounding, so renders are
byte-stable.

Edits apply at the source-string level. Content on every line except the
edited one keeps identical pixels; within the edited line, glyphs from the
span onward may shift. Only the final line of the block is ever re-wrapped:
if an edit makes it overflow the block width, the overflow spills onto new
lines below (and the sample is rejected if the block then exceeds the
canvas). Anything that would force re-layout elsewhere raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from ..images import RGB, BBox, ImageBuffer
from ..samples import EditTask
from .atlas import GlyphAtlas, default_atlas


class TextLayoutError(ValueError):
    pass


class TextOverflowError(TextLayoutError):
    pass


@dataclass(frozen=True)
class Typography:
    size: int = 16
    weight: str = "regular"  # regular | bold
    color: RGB = (20, 20, 20)
    letter_spacing: int = 0
    line_height: int = 22
    shadow: tuple[int, int, RGB] | None = None  # (dx, dy, color)

    def __post_init__(self) -> None:
        if self.size < 8:
            raise TextLayoutError(f"font size must be >= 8, got {self.size}")
        if self.line_height < self.size:
            raise TextLayoutError("line height must be at least the font size")
        if self.weight not in ("regular", "bold"):
            raise TextLayoutError(f"unknown weight {self.weight!r}")
        if self.letter_spacing < 0:
            raise TextLayoutError("letter spacing must be >= 0")
        if self.shadow is not None:
            dx, dy, _ = self.shadow
            if not (0 <= dx <= 2 and 0 <= dy <= 2):
                raise TextLayoutError("shadow offsets are limited to 0..2 px")


@dataclass(frozen=True)
class StyleDelta:
    color: RGB | None = None
    size: int | None = None
    letter_spacing: int | None = None
    weight: str | None = None
    shadow: tuple[int, int, RGB] | None = None

    @property
    def changes_footprint(self) -> bool:
        """Size and spacing move glyphs; color/weight/shadow only restyle them."""
        return self.size is not None or self.letter_spacing is not None

    def apply(self, typo: Typography) -> Typography:
        return Typography(
            size=self.size if self.size is not None else typo.size,
            weight=self.weight if self.weight is not None else typo.weight,
            color=self.color if self.color is not None else typo.color,
            letter_spacing=(
                self.letter_spacing if self.letter_spacing is not None else typo.letter_spacing
            ),
            line_height=typo.line_height,
            shadow=self.shadow if self.shadow is not None else typo.shadow,
        )

    def describe(self) -> str:
        parts = []
        if self.size is not None:
            parts.append(f"set the font size to {self.size}px")
        if self.letter_spacing is not None:
            parts.append(f"set the letter spacing to {self.letter_spacing}px")
        if self.weight is not None:
            parts.append(f"make it {self.weight}")
        if self.color is not None:
            parts.append(f"recolor it to rgb{self.color}")
        if self.shadow is not None:
            parts.append("give it a drop shadow")
        return " and ".join(parts) if parts else "keep its style"


@dataclass(frozen=True)
class StyleSpan:
    line: int
    start: int
    end: int
    delta: StyleDelta


@dataclass(frozen=True)
class TextDoc:
    canvas: tuple[int, int, RGB]  # width, height, background
    origin: tuple[int, int]
    block_width: int
    lines: tuple[str, ...]
    typography: Typography
    style_spans: tuple[StyleSpan, ...] = ()

    def __post_init__(self) -> None:
        if not self.lines:
            raise TextLayoutError("a text block needs at least one line")
        for i, line in enumerate(self.lines):
            if not line:
                raise TextLayoutError(f"line {i} is empty")

    def style_at(self, line: int, index: int) -> Typography:
        style = self.typography
        for span in self.style_spans:
            if span.line == line and span.start <= index < span.end:
                style = span.delta.apply(style)
        return style


@dataclass(frozen=True)
class TextEditOp:
    kind: EditTask
    line: int
    start: int
    end: int
    payload: str | StyleDelta
    requires_relayout: bool

    def __post_init__(self) -> None:
        if not self.kind.is_text:
            raise TextLayoutError(f"{self.kind.value} is not a text edit")
        content = self.kind != EditTask.TEXT_STYLE
        if content and not isinstance(self.payload, str):
            raise TextLayoutError("content edits need a string payload")
        if not content and not isinstance(self.payload, StyleDelta):
            raise TextLayoutError("style edits need a StyleDelta payload")
        # Content edits change how much text there is, so they always carry
        # the re-layout requirement; style edits only when the footprint moves.
        expected = True if content else self.payload.changes_footprint
        if self.requires_relayout != expected:
            raise TextLayoutError(
                f"requires_relayout must be {expected} for this op"
            )


def make_text_edit(kind: EditTask, line: int, start: int, end: int, payload) -> TextEditOp:
    content = kind != EditTask.TEXT_STYLE
    relayout = True if content else payload.changes_footprint
    return TextEditOp(
        kind=kind, line=line, start=start, end=end, payload=payload, requires_relayout=relayout
    )


# --- metric helpers -----------------------------------------------------------


def _round_half_up(v: np.ndarray | float):
    return np.floor(v + 0.5)


def _scale_len(value: int, size: int, em: int) -> int:
    return int(_round_half_up(value * size / em))


def _scale_bitmap(bitmap: np.ndarray, size: int, em: int) -> np.ndarray:
    """Bilinear rescale of a coverage bitmap to the requested pixel size."""
    h, w = bitmap.shape
    out_h = max(1, _scale_len(h, size, em))
    out_w = max(1, _scale_len(w, size, em))
    if (out_h, out_w) == (h, w):
        return bitmap
    src = bitmap.astype(np.float64)
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bot = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    return _round_half_up(top * (1 - wy) + bot * wy).astype(np.uint8)


def _embolden(bitmap: np.ndarray) -> np.ndarray:
    if bitmap.size == 0:
        return bitmap
    shifted = np.zeros_like(bitmap)
    shifted[:, 1:] = bitmap[:, :-1]
    return np.maximum(bitmap, shifted)


def _glyph_advance(atlas: GlyphAtlas, ch: str, style: Typography) -> int:
    glyph = atlas.get(ord(ch))
    return _scale_len(glyph.advance, style.size, atlas.em)


def measure_line(
    line: str, typo: Typography, atlas: GlyphAtlas | None = None
) -> int:
    """Total pen advance of ``line`` under a uniform style."""
    atlas = atlas or default_atlas()
    width = 0
    for ch in line:
        width += _glyph_advance(atlas, ch, typo) + typo.letter_spacing
    return width


# --- layout and rendering ------------------------------------------------------


@dataclass(frozen=True)
class GlyphPlacement:
    line: int
    index: int  # character index within the line
    char: str
    box: BBox  # pen cell: (pen_x, line_top, advance, line_height)
    style: Typography


def layout_glyphs(doc: TextDoc, atlas: GlyphAtlas | None = None) -> list[GlyphPlacement]:
    """Placements for every non-whitespace glyph, in reading order."""
    atlas = atlas or default_atlas()
    ox, oy = doc.origin
    line_height = doc.typography.line_height
    out: list[GlyphPlacement] = []
    for li, line in enumerate(doc.lines):
        pen = ox
        top = oy + li * line_height
        for ci, ch in enumerate(line):
            style = doc.style_at(li, ci)
            adv = _glyph_advance(atlas, ch, style)
            if not ch.isspace():
                out.append(
                    GlyphPlacement(
                        line=li,
                        index=ci,
                        char=ch,
                        box=BBox(pen, top, max(1, adv), line_height),
                        style=style,
                    )
                )
            pen += adv + style.letter_spacing
    return out


def _blend_glyph(
    canvas: np.ndarray, bitmap: np.ndarray, x: int, y: int, color: RGB
) -> None:
    h, w = bitmap.shape
    if h == 0 or w == 0:
        return
    H, W = canvas.shape[:2]
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, W), min(y + h, H)
    if x0 >= x1 or y0 >= y1:
        return
    a = bitmap[y0 - y : y1 - y, x0 - x : x1 - x].astype(np.float64)[..., None] / 255.0
    region = canvas[y0:y1, x0:x1, :3].astype(np.float64)
    mixed = region * (1.0 - a) + np.asarray(color, dtype=np.float64) * a
    canvas[y0:y1, x0:x1, :3] = _round_half_up(mixed).astype(np.uint8)


def render_text(
    doc: TextDoc, atlas: GlyphAtlas | None = None
) -> tuple[ImageBuffer, list[BBox]]:
    """Rasterize the doc; returns the image and per-glyph boxes in reading order."""
    atlas = atlas or default_atlas()
    cw, ch_, bg = doc.canvas
    block_bottom = doc.origin[1] + len(doc.lines) * doc.typography.line_height
    if block_bottom > ch_:
        raise TextLayoutError(f"block bottom {block_bottom} exceeds canvas height {ch_}")
    for li, line in enumerate(doc.lines):
        width = _line_width(doc, li, atlas)
        if width > doc.block_width:
            raise TextLayoutError(f"line {li} is {width}px wide (block is {doc.block_width})")

    arr = np.empty((ch_, cw, 4), dtype=np.uint8)
    arr[..., :3] = np.asarray(bg, dtype=np.uint8)
    arr[..., 3] = 255

    boxes: list[BBox] = []
    for p in layout_glyphs(doc, atlas):
        glyph = atlas.get(ord(p.char))
        bitmap = _scale_bitmap(glyph.bitmap, p.style.size, atlas.em)
        if p.style.weight == "bold":
            bitmap = _embolden(bitmap)
        ascent_s = _scale_len(atlas.ascent, p.style.size, atlas.em)
        gx = p.box.x + _scale_len(glyph.left, p.style.size, atlas.em)
        gy = p.box.y + ascent_s - _scale_len(glyph.top, p.style.size, atlas.em)
        if p.style.shadow is not None:
            dx, dy, shadow_color = p.style.shadow
            _blend_glyph(arr, bitmap, gx + dx, gy + dy, shadow_color)
        _blend_glyph(arr, bitmap, gx, gy, p.style.color)
        boxes.append(p.box)
    return ImageBuffer(arr), boxes


def _line_width(doc: TextDoc, li: int, atlas: GlyphAtlas) -> int:
    width = 0
    for ci, ch in enumerate(doc.lines[li]):
        style = doc.style_at(li, ci)
        width += _glyph_advance(atlas, ch, style) + style.letter_spacing
    return width


# --- editing -------------------------------------------------------------------


def _is_cjk(ch: str) -> bool:
    return 0x4E00 <= ord(ch) <= 0x9FFF


def _break_positions(line: str) -> list[int]:
    """Indices where the line may wrap (after spaces or around CJK glyphs)."""
    out = []
    for i in range(1, len(line)):
        if line[i - 1].isspace() or line[i].isspace() or _is_cjk(line[i - 1]) or _is_cjk(line[i]):
            out.append(i)
    return out


def _split_to_fit(line: str, typo: Typography, width: int, atlas: GlyphAtlas) -> tuple[str, str]:
    """Head that fits plus the stripped remainder; hard-breaks if it must."""
    candidates = [i for i in _break_positions(line)]
    best = None
    for i in candidates:
        head = line[:i].rstrip()
        if head and measure_line(head, typo, atlas) <= width:
            best = i
    if best is None:
        # no soft break fits: hard-break at the widest fitting prefix
        for i in range(len(line) - 1, 0, -1):
            head = line[:i].rstrip()
            if head and measure_line(head, typo, atlas) <= width:
                best = i
                break
    if best is None:
        raise TextOverflowError("a single glyph exceeds the block width")
    head = line[:best].rstrip()
    tail = line[best:].lstrip()
    return head, tail


def _changed_ranges(
    before: str,
    after: str,
    start: int,
    end: int,
    payload: str,
    typo: Typography,
    atlas: GlyphAtlas,
):
    """Character ranges whose glyphs may differ between the two renders.

    The tail of the line only keeps its pixels when the replacement spans
    the same pen advance as the original text, so stability is measured in
    advance units, not characters.
    """
    stable = measure_line(before[start:end], typo, atlas) == measure_line(payload, typo, atlas)
    if stable:
        return range(start, end), range(start, start + len(payload))
    return range(start, len(before)), range(start, len(after))


def ink_box(p: GlyphPlacement, atlas: GlyphAtlas) -> BBox:
    """Pen cell grown to the glyph's actual ink extent (bearings, bold, shadow)."""
    glyph = atlas.get(ord(p.char))
    box = p.box
    if glyph.bitmap.size:
        s, em = p.style.size, atlas.em
        ws = max(1, _scale_len(glyph.bitmap.shape[1], s, em))
        hs = max(1, _scale_len(glyph.bitmap.shape[0], s, em))
        if p.style.weight == "bold":
            ws += 1
        gx = p.box.x + _scale_len(glyph.left, s, em)
        gy = p.box.y + _scale_len(atlas.ascent, s, em) - _scale_len(glyph.top, s, em)
        if p.style.shadow is not None:
            dx, dy, _ = p.style.shadow
            ws += dx
            hs += dy
        box = box.union(BBox(gx, gy, ws, hs))
    return box


def apply_text_edit(
    doc: TextDoc, op: TextEditOp, atlas: GlyphAtlas | None = None
) -> tuple[TextDoc, list[BBox]]:
    """Apply ``op`` and report boxes of glyphs that changed in either render.

    Raises :class:`TextOverflowError` when the edit cannot be absorbed: a
    non-final line would overflow the block, or last-line re-wrapping would
    push the block off the canvas.
    """
    atlas = atlas or default_atlas()
    if not 0 <= op.line < len(doc.lines):
        raise TextLayoutError(f"line {op.line} out of range")
    line = doc.lines[op.line]
    if not 0 <= op.start <= op.end <= len(line):
        raise TextLayoutError(f"span ({op.start}, {op.end}) invalid for line of {len(line)}")
    if op.kind != EditTask.TEXT_STYLE and op.kind != EditTask.TEXT_INSERTION and op.start == op.end:
        raise TextLayoutError("deletion/replacement span must be non-empty")

    last_index = len(doc.lines) - 1
    rewrap_fired = False

    if op.kind == EditTask.TEXT_STYLE:
        for span in doc.style_spans:
            if span.line == op.line and span.start < op.end and op.start < span.end:
                raise TextLayoutError("overlapping style spans are not supported")
        edited = replace(
            doc,
            style_spans=doc.style_spans + (StyleSpan(op.line, op.start, op.end, op.payload),),
        )
        new_lines = list(edited.lines)
        changed_before = (
            range(op.start, len(line)) if op.payload.changes_footprint else range(op.start, op.end)
        )
        changed_after = changed_before
    else:
        payload: str = op.payload  # type: ignore[assignment]
        for ch in payload:
            if not atlas.covers(ord(ch)):
                raise TextLayoutError(f"payload glyph U+{ord(ch):04X} not in atlas")
        for span in doc.style_spans:
            if span.line == op.line:
                raise TextLayoutError("content edits on styled lines are not supported")
        new_line = line[: op.start] + payload + line[op.end :]
        if not new_line:
            raise TextLayoutError("edit would empty the line")
        new_lines = list(doc.lines)
        new_lines[op.line] = new_line
        changed_before, changed_after = _changed_ranges(
            line, new_line, op.start, op.end, payload, doc.typography, atlas
        )
        edited = replace(doc, lines=tuple(new_lines))

    # width discipline: the final line may re-wrap, everything else must fit
    width_of = lambda s: measure_line(s, doc.typography, atlas)
    if op.line != last_index:
        if _line_width(edited, op.line, atlas) > doc.block_width:
            raise TextOverflowError(
                f"edited line {op.line} overflows the block and only the final line may re-wrap"
            )
    else:
        if op.kind == EditTask.TEXT_STYLE:
            if _line_width(edited, op.line, atlas) > doc.block_width:
                raise TextOverflowError("styled final line overflows the block")
        else:
            while width_of(new_lines[-1]) > doc.block_width:
                head, tail = _split_to_fit(new_lines[-1], doc.typography, doc.block_width, atlas)
                new_lines[-1] = head
                if tail:
                    new_lines.append(tail)
                else:
                    break
                rewrap_fired = True
            edited = replace(edited, lines=tuple(new_lines))

    bottom = doc.origin[1] + len(edited.lines) * doc.typography.line_height
    if bottom > doc.canvas[1]:
        raise TextOverflowError("re-wrapped block no longer fits the canvas")

    before_placements = layout_glyphs(doc, atlas)
    after_placements = layout_glyphs(edited, atlas)

    def collect(placements: list[GlyphPlacement], changed: range) -> Iterable[BBox]:
        for p in placements:
            if p.line == op.line and p.index in changed:
                yield ink_box(p, atlas)
            elif rewrap_fired and p.line >= last_index:
                yield ink_box(p, atlas)

    boxes = list(collect(before_placements, changed_before))
    boxes += list(collect(after_placements, changed_after))
    return edited, boxes
