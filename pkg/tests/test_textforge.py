import re

import numpy as np
import pytest

from scribbleforge.images import BBox
from scribbleforge.instructions import RELAYOUT_CUE
from scribbleforge.rng import Rng
from scribbleforge.samples import EditTask, TEXT_TASKS
from scribbleforge.textforge import (
    MissingGlyphError,
    StyleDelta,
    TextDoc,
    TextGenConfig,
    TextOverflowError,
    Typography,
    apply_text_edit,
    build_text_sample,
    default_atlas,
    render_text,
)
from scribbleforge.textforge.doc import make_text_edit, measure_line
from scribbleforge.textforge.generate import generate_text_dataset
from scribbleforge.manifest import manifest_read


def doc_with(lines, size=16, width=400, canvas=(420, 300), **typo_kw):
    typo = Typography(size=size, line_height=size + 6, **typo_kw)
    return TextDoc(
        canvas=(canvas[0], canvas[1], (240, 240, 240)),
        origin=(10, 10),
        block_width=width,
        lines=tuple(lines),
        typography=typo,
    )


class TestAtlas:
    def test_coverage(self):
        atlas = default_atlas()
        for cp in range(33, 127):
            assert atlas.covers(cp)
        assert len(atlas.cjk_codepoints) >= 500
        assert atlas.em == atlas.ascent + atlas.descent

    def test_missing_glyph_names_codepoint(self):
        atlas = default_atlas()
        with pytest.raises(MissingGlyphError, match="U\\+0394"):
            atlas.get(0x0394)

    def test_glyph_bitmaps_fit_em_box(self):
        atlas = default_atlas()
        for cp in atlas.codepoints:
            g = atlas.get(cp)
            if g.bitmap.size:
                top_y = atlas.ascent - g.top
                assert top_y >= -1
                assert top_y + g.bitmap.shape[0] <= atlas.em + 2


class TestRenderText:
    def test_single_glyph_single_box(self):
        img, boxes = render_text(doc_with(["A"]))
        assert len(boxes) == 1
        assert img.width == 420 and img.height == 300

    def test_spaces_produce_no_boxes(self):
        _, boxes = render_text(doc_with(["a b"]))
        assert len(boxes) == 2

    def test_deterministic(self):
        doc = doc_with(["mixed 的 text", "一二 line two"])
        a, _ = render_text(doc)
        b, _ = render_text(doc)
        assert a == b

    def test_line_two_boxes_below_line_one(self):
        doc = doc_with(["first line", "second line"])
        _, boxes = render_text(doc)
        lh = doc.typography.line_height
        line1 = [b for b in boxes if b.y == 10]
        line2 = [b for b in boxes if b.y != 10]
        assert line1 and line2
        for b2 in line2:
            for b1 in line1:
                assert b2.y >= b1.y + lh

    def test_missing_glyph_raises(self):
        with pytest.raises(MissingGlyphError):
            render_text(doc_with(["Δelta"]))

    def test_block_taller_than_canvas_rejected(self):
        doc = doc_with(["x"] * 40, canvas=(200, 120))
        with pytest.raises(Exception):
            render_text(doc)

    def test_ink_stays_inside_glyph_cells_dilated(self):
        doc = doc_with(["Engine 木"], size=18)
        img, boxes = render_text(doc)
        bg = np.all(img.array[..., :3] == 240, axis=-1)
        changed = ~bg
        allowed = np.zeros_like(changed)
        for b in boxes:
            allowed |= b.dilated(2).to_mask(img.width, img.height)
        assert not (changed & ~allowed).any()


class TestApplyTextEdit:
    def test_tail_deletion_in_middle_line_is_local(self):
        doc = doc_with(["alpha beta gamma", "delta epsilon", "zeta"])
        line = doc.lines[1]
        op = make_text_edit(EditTask.TEXT_DELETION, 1, len("delta "), len(line), "")
        edited, boxes = apply_text_edit(doc, op)
        assert edited.lines == ("alpha beta gamma", "delta ", "zeta")
        before, _ = render_text(doc)
        after, _ = render_text(edited)
        diff = np.any(before.array != after.array, axis=-1)
        allowed = np.zeros_like(diff)
        for b in boxes:
            allowed |= b.dilated(2).to_mask(before.width, before.height)
        assert not (diff & ~allowed).any()
        # the final line band was never touched
        lh = doc.typography.line_height
        band_top = 10 + 2 * lh
        assert not diff[band_top:, :].any()

    def test_color_style_is_span_local_and_no_relayout(self):
        doc = doc_with(["steady colors here", "last line"])
        op = make_text_edit(
            EditTask.TEXT_STYLE, 0, 7, 13, StyleDelta(color=(200, 30, 30))
        )
        assert op.requires_relayout is False
        edited, boxes = apply_text_edit(doc, op)
        before, _ = render_text(doc)
        after, _ = render_text(edited)
        diff = np.any(before.array != after.array, axis=-1)
        allowed = np.zeros_like(diff)
        for b in boxes:
            allowed |= b.dilated(2).to_mask(before.width, before.height)
        assert diff.any()
        assert not (diff & ~allowed).any()

    def test_size_style_requires_relayout(self):
        op = make_text_edit(EditTask.TEXT_STYLE, 0, 0, 3, StyleDelta(size=20))
        assert op.requires_relayout is True

    def test_overflowing_insertion_rewraps_last_line(self):
        doc = doc_with(["short first line", "tail"], width=160, canvas=(200, 300))
        payload = " one two three four five six seven"
        op = make_text_edit(EditTask.TEXT_INSERTION, 1, 4, 4, payload)
        edited, _ = apply_text_edit(doc, op)
        assert len(edited.lines) > 2
        atlas = default_atlas()
        for line in edited.lines:
            assert measure_line(line, doc.typography, atlas) <= doc.block_width
        _, boxes = render_text(edited)
        for i, a in enumerate(boxes):
            for b in boxes[i + 1 :]:
                assert not a.overlaps(b)

    def test_middle_line_overflow_rejected(self):
        doc = doc_with(["aaa bbb", "ccc ddd", "e"], width=90)
        op = make_text_edit(
            EditTask.TEXT_INSERTION, 0, 3, 3, " overly long insertion payload"
        )
        with pytest.raises(TextOverflowError):
            apply_text_edit(doc, op)

    def test_rewrap_beyond_canvas_rejected(self):
        doc = doc_with(["abc def", "ghi jkl"], width=110, canvas=(130, 58), size=16)
        op = make_text_edit(EditTask.TEXT_INSERTION, 1, 0, 0, "xxxxx yyyyy zzzzz www ")
        with pytest.raises(TextOverflowError):
            apply_text_edit(doc, op)

    def test_span_validation(self):
        doc = doc_with(["hello"])
        with pytest.raises(Exception):
            apply_text_edit(doc, make_text_edit(EditTask.TEXT_DELETION, 0, 3, 9, ""))

    def test_edit_emptying_line_rejected(self):
        doc = doc_with(["hello", "x"])
        with pytest.raises(Exception):
            apply_text_edit(doc, make_text_edit(EditTask.TEXT_DELETION, 1, 0, 1, ""))


DELETE_WORDS = re.compile(r"\b(delete|remove|erase|take out|cut)\b", re.I)


class TestBuildSample:
    def test_fixed_seed_reproducible(self):
        a = build_text_sample(Rng(42, "rep"), EditTask.TEXT_REPLACEMENT)
        b = build_text_sample(Rng(42, "rep"), EditTask.TEXT_REPLACEMENT)
        assert a.id == b.id
        assert a.input == b.input and a.target == b.target
        assert a.instruction == b.instruction
        assert np.array_equal(a.edit_mask, b.edit_mask)

    def test_deletion_sample_instruction(self):
        from scribbleforge.scribble import color_name

        s = build_text_sample(Rng(3, "del"), EditTask.TEXT_DELETION)
        assert DELETE_WORDS.search(s.instruction)
        assert color_name(s.scribble.color) in s.instruction

    def test_mask_contained_in_span_boxes_and_band(self):
        for seed in range(12):
            task = TEXT_TASKS[seed % 4]
            s = build_text_sample(Rng(900 + seed, "mask"), task)
            assert s.edit_mask.any()
            h, w = s.edit_mask.shape
            allowed = np.zeros((h, w), dtype=bool)
            for bx in s.extra["span_boxes"]:
                allowed |= BBox(*bx).dilated(2).to_mask(w, h)
            if s.extra["relayout_fired"]:
                allowed |= BBox(*s.extra["band"]).dilated(2).to_mask(w, h)
            assert not (s.edit_mask & ~allowed).any()

    def test_relayout_cue_gating(self):
        for seed in range(16):
            task = TEXT_TASKS[seed % 4]
            s = build_text_sample(Rng(500 + seed, "cue"), task)
            assert (RELAYOUT_CUE in s.instruction) == s.extra["relayout_required"]

    def test_dataset_round_trip(self, tmp_path):
        cfg = TextGenConfig(count=8, seed=11)
        manifest = generate_text_dataset(cfg, tmp_path)
        assert len(manifest) == 8
        back = manifest_read(tmp_path)
        assert back == manifest
        tasks = {e.task for e in back}
        assert tasks == {t.value for t in TEXT_TASKS}

    def test_retries_exhausted_raises(self):
        from scribbleforge.textforge.generate import TextSampleError

        # canvas too short for any paragraph: every attempt rejects
        cfg = TextGenConfig(canvas_range=(40, 40), attempts=3)
        with pytest.raises(TextSampleError, match="3 attempts"):
            build_text_sample(Rng(1, "no-room"), EditTask.TEXT_DELETION, cfg)
