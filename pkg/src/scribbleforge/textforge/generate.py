"""Randomized text-editing samples with exact pixel supervision.

Each sample renders a mixed CJK/Latin paragraph, applies one source-string
edit, re-renders with identical typography, and derives the edit mask from
the exact pixel diff. The scribble anchors to the edited span's box in the
pre-edit render (a caret-sized box for pure insertions), and the
instruction carries the re-layout cue exactly when the edit changes
character footprint.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..editloss import edit_mask as make_edit_mask
from ..images import BBox, ImageBuffer
from ..instructions import InstructionContext, render_template_instruction
from ..manifest import DatasetManifest, manifest_write, save_sample
from ..rng import Rng
from ..samples import TASK_ALIASES, EditSample, EditTask, Provenance, TEXT_TASKS
from ..scribble import FitConfig, fit_template, render_scribble, template_library
from .atlas import GlyphAtlas, default_atlas
from .doc import (
    StyleDelta,
    TextDoc,
    TextEditOp,
    TextLayoutError,
    TextOverflowError,
    Typography,
    apply_text_edit,
    layout_glyphs,
    make_text_edit,
    measure_line,
    render_text,
)

log = logging.getLogger(__name__)

LATIN_WORDS = (
    "river market garden window signal lantern harbor meadow copper violet "
    "morning evening quiet silver branch stone cloud valley ember thread "
    "paper candle mirror saddle timber velvet walnut autumn spring winter "
    "summer bridge anchor button carpet dragon engine falcon guitar hammer "
    "island jacket kettle ladder magnet needle orange pocket"
).split()

TASK_CODES = {t: alias for alias, t in TASK_ALIASES.items()}


class TextSampleError(RuntimeError):
    pass


@dataclass(frozen=True)
class TextGenConfig:
    count: int = 10
    tasks: tuple[EditTask, ...] = TEXT_TASKS
    seed: int = 0
    canvas_range: tuple[int, int] = (192, 256)
    lines_range: tuple[int, int] = (3, 8)
    size_range: tuple[int, int] = (13, 19)
    cjk_ratio: float = 0.5
    mask_factor: int = 8
    attempts: int = 8


def _pick_colors(rng: Rng) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    if rng.uniform() < 0.8:  # dark text on a light canvas
        bg = tuple(int(rng.integers(228, 252)) for _ in range(3))
        fg = tuple(int(rng.integers(10, 70)) for _ in range(3))
    else:
        bg = tuple(int(rng.integers(8, 40)) for _ in range(3))
        fg = tuple(int(rng.integers(200, 246)) for _ in range(3))
    return bg, fg


def _token(rng: Rng, atlas: GlyphAtlas, cjk_ratio: float) -> str:
    if rng.uniform() < cjk_ratio:
        cps = atlas.cjk_codepoints
        return "".join(chr(cps[rng.integers(0, len(cps))]) for _ in range(rng.integers(1, 4)))
    return LATIN_WORDS[rng.integers(0, len(LATIN_WORDS))]


def make_doc(rng: Rng, cfg: TextGenConfig, atlas: GlyphAtlas | None = None) -> TextDoc:
    atlas = atlas or default_atlas()
    cw = rng.integers(cfg.canvas_range[0], cfg.canvas_range[1] + 1)
    ch = rng.integers(cfg.canvas_range[0], cfg.canvas_range[1] + 1)
    bg, fg = _pick_colors(rng)
    size = rng.integers(cfg.size_range[0], cfg.size_range[1] + 1)
    typo = Typography(
        size=size,
        weight="bold" if rng.uniform() < 0.2 else "regular",
        color=fg,
        letter_spacing=rng.integers(0, 2) if rng.uniform() < 0.25 else 0,
        line_height=size + rng.integers(5, 10),
        shadow=(
            (rng.integers(1, 3), rng.integers(1, 3), tuple(min(255, c + 60) for c in fg))
            if rng.uniform() < 0.15
            else None
        ),
    )
    ox = rng.integers(10, 21)
    oy = rng.integers(10, 21)
    block_width = cw - 2 * ox
    max_lines = (ch - oy - 4) // typo.line_height
    n_lines = min(rng.integers(cfg.lines_range[0], cfg.lines_range[1] + 1), max_lines)
    if n_lines < 2:
        raise TextLayoutError("canvas too short for a paragraph")

    lines = []
    for li in range(n_lines):
        fill = rng.uniform(0.62, 0.92) if li < n_lines - 1 else rng.uniform(0.30, 0.72)
        line = ""
        while True:
            tok = _token(rng, atlas, cfg.cjk_ratio)
            joined = line + (" " if line and not _all_cjk(tok) else "") + tok
            if measure_line(joined, typo, atlas) > block_width * fill:
                if line:
                    break
                joined = joined[: max(1, len(joined) // 2)]
                if measure_line(joined, typo, atlas) > block_width:
                    continue
            line = joined
            if measure_line(line, typo, atlas) > block_width * fill:
                break
        lines.append(line)
    return TextDoc(
        canvas=(cw, ch, bg),
        origin=(ox, oy),
        block_width=block_width,
        lines=tuple(lines),
        typography=typo,
    )


def _all_cjk(tok: str) -> bool:
    return all(0x4E00 <= ord(c) <= 0x9FFF for c in tok)


def _pick_line(rng: Rng, doc: TextDoc) -> int:
    if rng.uniform() < 0.5:
        return len(doc.lines) - 1
    return rng.integers(0, len(doc.lines))


def _pick_span(rng: Rng, line: str, max_len: int = 6) -> tuple[int, int]:
    for _ in range(12):
        length = rng.integers(1, min(max_len, len(line)) + 1)
        if length >= len(line):
            continue
        start = rng.integers(0, len(line) - length + 1)
        span = line[start : start + length]
        if span.strip():
            return start, start + length
    raise TextLayoutError("no usable span in line")


def propose_op(rng: Rng, doc: TextDoc, task: EditTask, atlas: GlyphAtlas) -> TextEditOp:
    li = _pick_line(rng, doc)
    line = doc.lines[li]
    last = li == len(doc.lines) - 1
    typo = doc.typography
    slack = doc.block_width - measure_line(line, typo, atlas)

    if task == EditTask.TEXT_INSERTION:
        pos = rng.integers(0, len(line) + 1)
        payload = _token(rng, atlas, 0.5)
        if last and rng.uniform() < 0.4:
            # long insertions overflow the final line and exercise re-wrapping
            extra = [_token(rng, atlas, 0.5) for _ in range(rng.integers(2, 5))]
            payload = payload + "".join(
                t if _all_cjk(t) else " " + t for t in extra
            )
        if pos > 0 and not line[pos - 1].isspace() and not _all_cjk(payload):
            payload = " " + payload
        if not last and measure_line(payload, typo, atlas) > slack:
            payload = payload.strip()[:1]  # fall back to one glyph
            if measure_line(payload, typo, atlas) > slack:
                raise TextOverflowError("no room on this line")
        return make_text_edit(task, li, pos, pos, payload)

    if task == EditTask.TEXT_DELETION:
        start, end = _pick_span(rng, line)
        return make_text_edit(task, li, start, end, "")

    if task == EditTask.TEXT_REPLACEMENT:
        start, end = _pick_span(rng, line)
        payload = _token(rng, atlas, 0.5)
        growth = measure_line(payload, typo, atlas) - measure_line(line[start:end], typo, atlas)
        if not last and growth > slack:
            payload = payload[:1]
        return make_text_edit(task, li, start, end, payload)

    if task == EditTask.TEXT_STYLE:
        start, end = _pick_span(rng, line, max_len=8)
        choice = rng.choice(["color", "shadow", "weight", "size", "spacing"])
        if choice == "size":
            span_w = measure_line(line[start:end], typo, atlas)
            grow_ok = slack > span_w // 2
            delta = StyleDelta(
                size=max(8, typo.size + (rng.integers(3, 6) if grow_ok else -rng.integers(3, 6)))
            )
        elif choice == "spacing":
            if slack > 2 * (end - start):
                delta = StyleDelta(letter_spacing=typo.letter_spacing + rng.integers(1, 3))
            else:
                delta = StyleDelta(color=_contrasting_color(rng, typo.color))
        elif choice == "shadow":
            delta = StyleDelta(shadow=(rng.integers(1, 3), rng.integers(1, 3), (128, 128, 128)))
        elif choice == "weight":
            delta = StyleDelta(weight="bold" if typo.weight == "regular" else "regular")
        else:
            delta = StyleDelta(color=_contrasting_color(rng, typo.color))
        return make_text_edit(task, li, start, end, delta)

    raise TextLayoutError(f"{task.value} is not a text task")


def _contrasting_color(rng: Rng, current) -> tuple[int, int, int]:
    options = [(200, 30, 30), (30, 110, 200), (20, 150, 60), (180, 60, 180), (200, 120, 20)]
    far = [c for c in options if max(abs(a - b) for a, b in zip(c, current)) >= 80]
    return far[rng.integers(0, len(far))] if far else options[0]


def _pen_x_at(doc: TextDoc, li: int, index: int, atlas: GlyphAtlas) -> int:
    pen = doc.origin[0]
    for ci, ch in enumerate(doc.lines[li][:index]):
        style = doc.style_at(li, ci)
        pen += measure_line(ch, style, atlas)
    return pen


def _anchor_for(doc: TextDoc, op: TextEditOp, boxes: list[BBox], atlas: GlyphAtlas) -> BBox:
    before_span = [
        p.box
        for p in layout_glyphs(doc, atlas)
        if p.line == op.line and op.start <= p.index < op.end
    ]
    if before_span:
        box = before_span[0]
        for b in before_span[1:]:
            box = box.union(b)
        return box
    # pure insertion point: a caret-sized box at the pen position
    pen = _pen_x_at(doc, op.line, op.start, atlas)
    top = doc.origin[1] + op.line * doc.typography.line_height
    w = max(8, doc.typography.size // 2)
    return BBox(pen - w // 2, top, w, doc.typography.line_height)


def last_line_band(doc_before: TextDoc, doc_after: TextDoc) -> BBox:
    """Horizontal strip from the top of the old final line to the new block bottom."""
    lh = doc_before.typography.line_height
    oy = doc_before.origin[1]
    y0 = oy + (len(doc_before.lines) - 1) * lh
    y1 = oy + len(doc_after.lines) * lh
    return BBox(doc_before.origin[0], y0, doc_before.block_width, max(1, y1 - y0))


def build_text_sample(
    rng: Rng,
    task: EditTask,
    cfg: TextGenConfig = TextGenConfig(),
    sample_id: str | None = None,
    atlas: GlyphAtlas | None = None,
) -> EditSample:
    """One randomized text-editing sample; retries layout rejections."""
    if not task.is_text:
        raise TextSampleError(f"{task.value} is not a text-editing task")
    atlas = atlas or default_atlas()
    last_error: Exception | None = None
    for attempt in range(cfg.attempts):
        r = rng.spawn(f"attempt{attempt}")
        try:
            doc = make_doc(r.spawn("doc"), cfg, atlas)
            op = propose_op(r.spawn("op"), doc, task, atlas)
            edited, changed_boxes = apply_text_edit(doc, op, atlas)
            before_img, _ = render_text(doc, atlas)
            after_img, _ = render_text(edited, atlas)
            mask = make_edit_mask(before_img, after_img, tau=0, factor=cfg.mask_factor)
            if not mask.pixel.any():
                raise TextLayoutError("edit changed no pixels")

            anchor = _anchor_for(doc, op, changed_boxes, atlas)
            scr_rng = r.spawn("scribble")
            lib = template_library()
            template = lib[scr_rng.choice(sorted(lib))]
            spec = fit_template(
                template, anchor, scr_rng, FitConfig(thickness_range=(2, 4), margin=0.2)
            )
            input_img = render_scribble(before_img, spec)

            from ..scribble import color_name

            rewrap_fired = len(edited.lines) != len(doc.lines)
            spanned = doc.lines[op.line][op.start : op.end].strip()
            ctx = InstructionContext(
                task=task,
                scribble_kind=template.kind,
                color_name=color_name(spec.color),
                object_desc=f'the text "{spanned}"' if spanned else "the marked spot",
                extras={
                    "relayout": op.requires_relayout,
                    **(
                        {"text": op.payload.strip()}
                        if isinstance(op.payload, str) and op.payload.strip()
                        else {}
                    ),
                    **(
                        {"style_change": op.payload.describe()}
                        if isinstance(op.payload, StyleDelta)
                        else {}
                    ),
                },
            )
            instruction = render_template_instruction(ctx, r.spawn("instruction"))

            region = None
            for b in changed_boxes:
                region = b if region is None else region.union(b)
            band = last_line_band(doc, edited)
            if op.requires_relayout:
                region = band if region is None else region.union(band)

            return EditSample(
                id=sample_id or f"txt-{TASK_CODES[task]}-{rng.seed:08x}-{attempt}",
                input=input_img,
                instruction=instruction,
                target=after_img,
                scribble=spec,
                task=task,
                provenance=Provenance.SYNTHETIC,
                edit_mask=mask.pixel,
                base=before_img,
                changed_region=region,
                seed=rng.seed,
                extra={
                    "instruction_ctx": ctx.to_json(),
                    "span_boxes": [[b.x, b.y, b.w, b.h] for b in changed_boxes],
                    "band": [band.x, band.y, band.w, band.h],
                    "relayout_required": op.requires_relayout,
                    "relayout_fired": rewrap_fired,
                    "op": {
                        "kind": task.value,
                        "line": op.line,
                        "start": op.start,
                        "end": op.end,
                    },
                },
            )
        except (TextLayoutError, TextOverflowError) as err:
            last_error = err
            continue
    raise TextSampleError(f"no valid sample after {cfg.attempts} attempts: {last_error}")


def generate_text_dataset(cfg: TextGenConfig, out_dir) -> DatasetManifest:
    """Generate ``cfg.count`` samples cycling through ``cfg.tasks`` and persist them."""
    entries = []
    skipped = 0
    for i in range(cfg.count):
        task = cfg.tasks[i % len(cfg.tasks)]
        rng = Rng(cfg.seed, f"text/{i}")
        sid = f"txt-{TASK_CODES[task]}-{cfg.seed:08x}-{i:05d}"
        try:
            sample = build_text_sample(rng, task, cfg, sample_id=sid)
        except TextSampleError as err:
            log.warning("skipping %s: %s", sid, err)
            skipped += 1
            continue
        entries.append(save_sample(sample, out_dir))
    manifest = DatasetManifest(tuple(entries))
    manifest_write(manifest, out_dir)
    if skipped:
        log.info("text-gen: wrote %d samples, skipped %d", len(entries), skipped)
    return manifest
