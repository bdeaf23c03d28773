import itertools
import math

import numpy as np
import pytest

from scribbleforge.images import BBox, ImageBuffer
from scribbleforge.rng import Rng
from scribbleforge.scribble import (
    COLOR_DISTANCE_MIN,
    PALETTE,
    AnchorTooSmallError,
    FitConfig,
    PaletteExhaustedError,
    ScribbleSpec,
    add_distractors,
    chebyshev,
    color_name,
    fit_template,
    render_scribble,
    sample_color,
    scribble_geometry,
    stroke_mask,
    template_library,
)

ZERO_JITTER = FitConfig(scale_jitter=0.0, rotation_jitter_deg=0.0, center_jitter=0.0)


def canvas(w=64, h=64):
    return ImageBuffer.filled(w, h, (255, 255, 255, 255))


class TestPalette:
    def test_all_pairs_clear_the_bound(self):
        for (_, a), (_, b) in itertools.combinations(PALETTE, 2):
            assert chebyshev(a, b) >= COLOR_DISTANCE_MIN

    def test_sample_without_exclusions(self, rng):
        assert sample_color(rng) in {rgb for _, rgb in PALETTE}

    def test_excluded_color_respected(self, rng):
        red = (240, 16, 16)
        for _ in range(20):
            c = sample_color(rng, [red])
            assert chebyshev(c, red) >= COLOR_DISTANCE_MIN

    def test_four_sequential_draws_pairwise_distinct(self, rng):
        taken = []
        for _ in range(4):
            taken.append(sample_color(rng, taken))
        for a, b in itertools.combinations(taken, 2):
            assert chebyshev(a, b) >= COLOR_DISTANCE_MIN

    def test_exhaustion_raises(self, rng):
        everything = [rgb for _, rgb in PALETTE]
        with pytest.raises(PaletteExhaustedError):
            sample_color(rng, everything)

    def test_names_round_trip(self):
        for name, rgb in PALETTE:
            assert color_name(rgb) == name


class TestFitTemplate:
    def test_zero_jitter_circumscribes_anchor(self):
        lib = template_library()
        anchor = BBox(10, 10, 20, 20)
        spec = fit_template(lib["rectangle"], anchor, Rng(1, "fit"), ZERO_JITTER)
        pts = scribble_geometry(spec)[0]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        # the rendered box must contain the anchor with margin on every side
        assert min(xs) < anchor.x and max(xs) > anchor.x2 - 1
        assert min(ys) < anchor.y and max(ys) > anchor.y2 - 1
        assert max(xs) - min(xs) == pytest.approx(20 * (1 + 2 * ZERO_JITTER.margin), abs=1e-6)
        assert (min(xs) + max(xs)) / 2 == pytest.approx(anchor.center[0], abs=1e-6)

    def test_same_rng_same_spec(self):
        lib = template_library()
        a = fit_template(lib["ellipse"], BBox(5, 5, 12, 9), Rng(7, "s"))
        b = fit_template(lib["ellipse"], BBox(5, 5, 12, 9), Rng(7, "s"))
        assert a == b

    def test_fitted_scribble_overlaps_anchor(self, rng):
        lib = template_library()
        names = sorted(lib)
        hits = 0
        trials = 1000
        for i in range(trials):
            r = rng.spawn(i)
            anchor = BBox(r.integers(8, 40), r.integers(8, 40), r.integers(12, 24), r.integers(12, 24))
            spec = fit_template(lib[r.choice(names)], anchor, r)
            # bounding box of the stroked geometry (geometry extent + radius)
            pts = [p for poly in scribble_geometry(spec) for p in poly]
            radius = spec.thickness / 2.0
            x0 = min(p[0] for p in pts) - radius
            x1 = max(p[0] for p in pts) + radius
            y0 = min(p[1] for p in pts) - radius
            y1 = max(p[1] for p in pts) + radius
            dilated = anchor.dilated(max(6, anchor.w // 2))
            overlaps = x0 < dilated.x2 and dilated.x < x1 and y0 < dilated.y2 and dilated.y < y1
            if overlaps:
                hits += 1
        assert hits == trials

    def test_tiny_anchor_rejected(self):
        lib = template_library()
        with pytest.raises(AnchorTooSmallError):
            fit_template(lib["rectangle"], BBox(4, 4, 2, 2), Rng(1, "t"))

    def test_contour_anchor_accepted(self):
        lib = template_library()
        contour = [(10, 10), (30, 10), (30, 26), (10, 26)]
        spec = fit_template(lib["hand_loop_a"], contour, Rng(3, "c"), ZERO_JITTER)
        assert spec.thickness >= 1


class TestRenderScribble:
    def test_offscreen_spec_leaves_image_unchanged(self):
        img = canvas()
        spec = ScribbleSpec(
            template_id="rectangle",
            color=(240, 16, 16),
            thickness=3,
            transform=(10.0, 0.0, 500.0, 0.0, 10.0, 500.0),
            jitter_seed=0,
        )
        assert render_scribble(img, spec) == img

    def test_horizontal_one_px_line(self):
        img = canvas(20, 12)
        # unit square maps to the segment x in [3, 15] at y = 5
        spec = ScribbleSpec(
            template_id="rectangle",
            color=(16, 16, 240),
            thickness=1,
            transform=(12.0, 0.0, 3.0, 0.0, 0.0, 5.0),
            jitter_seed=0,
        )
        out = render_scribble(img, spec).array
        want = np.zeros((12, 20), dtype=bool)
        want[5, 3:16] = True
        got = np.all(out == np.array([16, 16, 240, 255], dtype=np.uint8), axis=-1)
        assert np.array_equal(got, want)

    def test_rasterization_matches_distance_oracle(self, rng):
        lib = template_library()
        for trial in range(6):
            r = rng.spawn(f"raster{trial}")
            spec = fit_template(lib[r.choice(sorted(lib))], BBox(12, 12, 24, 18), r)
            got = stroke_mask(spec, 56, 48)
            polylines = scribble_geometry(spec)
            radius = spec.thickness / 2.0
            want = np.zeros((48, 56), dtype=bool)
            for y in range(48):
                for x in range(56):
                    for pts in polylines:
                        for p, q in zip(pts[:-1], pts[1:]):
                            vx, vy = q[0] - p[0], q[1] - p[1]
                            L2 = vx * vx + vy * vy
                            if L2 == 0:
                                d2 = (x - p[0]) ** 2 + (y - p[1]) ** 2
                            else:
                                t = max(0.0, min(1.0, ((x - p[0]) * vx + (y - p[1]) * vy) / L2))
                                d2 = (x - (p[0] + t * vx)) ** 2 + (y - (p[1] + t * vy)) ** 2
                            if d2 <= radius * radius:
                                want[y, x] = True
                                break
                        if want[y, x]:
                            break
            assert np.array_equal(got, want)

    def test_rendering_twice_is_idempotent(self, rng):
        lib = template_library()
        spec = fit_template(lib["ellipse"], BBox(10, 10, 20, 20), rng.spawn("idem"))
        img = canvas()
        once = render_scribble(img, spec)
        twice = render_scribble(once, spec)
        assert once == twice

    def test_stroke_locality(self, rng):
        lib = template_library()
        spec = fit_template(lib["hand_zigzag"], BBox(14, 14, 28, 20), rng.spawn("loc"))
        img = canvas()
        out = render_scribble(img, spec)
        changed = np.any(out.array != img.array, axis=-1)
        mask = stroke_mask(spec, img.width, img.height)
        assert np.array_equal(changed & ~mask, np.zeros_like(changed))


class TestDistractors:
    def test_single_distractor_diff_is_its_stroke(self, rng):
        img = canvas()
        out, specs = add_distractors(img, 1, (240, 16, 16), rng.spawn("d1"))
        assert len(specs) == 1
        changed = np.any(out.array != img.array, axis=-1)
        mask = stroke_mask(specs[0], img.width, img.height)
        assert np.array_equal(changed, changed & mask)

    def test_three_distractors_color_separation(self, rng):
        valid = (240, 16, 16)
        _, specs = add_distractors(canvas(), 3, valid, rng.spawn("d3"))
        colors = [valid] + [s.color for s in specs]
        for a, b in itertools.combinations(colors, 2):
            assert chebyshev(a, b) >= COLOR_DISTANCE_MIN

    def test_deterministic_under_seed(self):
        img = canvas()
        a_img, a_specs = add_distractors(img, 2, (16, 240, 16), Rng(99, "d"))
        b_img, b_specs = add_distractors(img, 2, (16, 240, 16), Rng(99, "d"))
        assert a_img == b_img and a_specs == b_specs

    def test_count_validated(self, rng):
        with pytest.raises(Exception):
            add_distractors(canvas(), 0, (240, 16, 16), rng)


def test_template_library_contents():
    lib = template_library()
    kinds = {t.kind for t in lib.values()}
    assert {"rectangle", "ellipse"} <= kinds
    freehand = [t for t in lib.values() if t.kind == "freehand"]
    assert len(freehand) >= 5
    for t in lib.values():
        for poly in t.polylines:
            assert len(poly.points) >= 2
