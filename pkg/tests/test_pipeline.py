import json
from pathlib import Path

import numpy as np
import pytest

from scribbleforge.images import load_png
from scribbleforge.manifest import MULTI_TASK_KIND, load_sample, manifest_read
from scribbleforge.pipeline import (
    CandidateConflictError,
    CandidateStore,
    MosaicStageConfig,
    Stage1Config,
    Stage2Config,
    StrokeValidationError,
    UnknownCandidateError,
    build_mosaics,
    export_training_splits,
    run_stage1_synth,
    run_stage2_candidates,
    stub_clients,
)
from scribbleforge.pipeline.stage2 import StubSegmenter, _FixtureIndex
from scribbleforge.samples import EditTask, OBJECT_TASKS, Provenance

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def stage1_cfg(out_dir, count=12, seed=5, **kw):
    return Stage1Config(
        count=count,
        seed=seed,
        stacks_dir=FIXTURES / "stacks",
        objects_dir=FIXTURES / "objects",
        out_dir=Path(out_dir),
        **kw,
    )


class TestStage1:
    def test_generates_valid_samples(self, tmp_path):
        manifest = run_stage1_synth(stage1_cfg(tmp_path))
        assert len(manifest) == 12
        for entry in manifest:
            sample = load_sample(entry, tmp_path)
            sample.validate()
            assert sample.edit_mask is not None
            assert sample.base is not None
            assert sample.provenance is Provenance.SYNTHETIC

    def test_locality_against_compositor_oracle(self, tmp_path):
        manifest = run_stage1_synth(stage1_cfg(tmp_path, count=16, seed=21))
        for entry in manifest:
            sample = load_sample(entry, tmp_path)
            outside = ~sample.changed_region.to_mask(sample.input.width, sample.input.height)
            diff = np.any(sample.base.array != sample.target.array, axis=-1)
            assert not (diff & outside).any(), entry.id

    def test_same_seed_identical_manifests(self, tmp_path):
        a = run_stage1_synth(stage1_cfg(tmp_path / "a", seed=8))
        b = run_stage1_synth(stage1_cfg(tmp_path / "b", seed=8))
        assert a == b

    def test_distractors_add_extra_strokes(self, tmp_path):
        manifest = run_stage1_synth(stage1_cfg(tmp_path, count=4, seed=2, distractor_max=3))
        for entry in manifest:
            assert 1 <= len(entry.extra["distractors"]) <= 3
            sample = load_sample(entry, tmp_path)
            colors = {tuple(d["color"]) for d in entry.extra["distractors"]}
            assert tuple(sample.scribble.color) not in colors

    def test_tasks_cycle(self, tmp_path):
        manifest = run_stage1_synth(stage1_cfg(tmp_path, count=8, seed=1))
        tasks = [e.task for e in manifest]
        assert tasks[:4] == [t.value for t in OBJECT_TASKS]

    def test_low_yield_fails_the_stage(self, tmp_path):
        from scribbleforge.compositor import LayerStack, save_stack
        from scribbleforge.compositor import Layer
        from scribbleforge.images import ImageBuffer
        from scribbleforge.pipeline import Stage1YieldError

        # a backdrop-only stack offers nothing to remove, so every sample fails
        bare = tmp_path / "bare_stacks" / "stack_000"
        backdrop = Layer(ImageBuffer.filled(32, 32, (90, 90, 90, 255)), (0, 0), "backdrop")
        save_stack(LayerStack(32, 32, (0, 0, 0, 255), (backdrop,)), bare)
        cfg = Stage1Config(
            count=6,
            seed=1,
            stacks_dir=bare.parent,
            objects_dir=FIXTURES / "objects",
            out_dir=tmp_path / "out",
            tasks=(EditTask.REMOVAL,),
            retries=2,
        )
        with pytest.raises(Stage1YieldError, match="0/6"):
            run_stage1_synth(cfg)


class TestMosaicStage:
    def test_build_from_manifest(self, tmp_path):
        src = tmp_path / "src"
        run_stage1_synth(stage1_cfg(src, count=10, seed=3))
        cfg = MosaicStageConfig(manifest_root=src, out_dir=tmp_path / "mt", count=5, seed=4)
        manifest = build_mosaics(cfg)
        assert len(manifest) == 5
        for entry in manifest:
            assert entry.task == MULTI_TASK_KIND
            parts = entry.extra["parts"]
            assert len(parts) in (2, 4)
            img = load_png(tmp_path / "mt" / entry.assets["input"])
            cw, chh = entry.extra["cell"]
            cols = img.width // cw
            for part in parts:
                src_img = load_png(src / f"assets/{part['id']}/input.png")
                r, c = divmod(part["cell"], cols)
                crop = img.array[r * chh : (r + 1) * chh, c * cw : (c + 1) * cw]
                # parts may have been re-colored; compare against the recolored input
                if tuple(part["color"]) == tuple(
                    manifest_read(src).by_id(part["id"]).color
                ):
                    assert np.array_equal(crop, src_img.array)


@pytest.fixture
def stage2_setup(tmp_path):
    cfg = Stage2Config(images_dir=FIXTURES / "real", store_dir=tmp_path / "store", seed=1)
    editor, segmenter, vlm = stub_clients(cfg.images_dir)
    return cfg, editor, segmenter, vlm


class TestStage2:
    def test_stub_flow_produces_pending_candidates(self, stage2_setup):
        cfg, editor, segmenter, vlm = stage2_setup
        store = CandidateStore(cfg.store_dir)
        candidates = run_stage2_candidates(cfg, editor, segmenter, vlm, store)
        assert len(candidates) == 6
        for c in candidates:
            assert c.provenance is Provenance.REAL_CANDIDATE
            assert c.edit_mask.any()
        assert len(store.list("pending")) == 6

    def test_empty_mask_skipped_with_audit(self, tmp_path):
        cfg = Stage2Config(images_dir=FIXTURES / "real", store_dir=tmp_path / "store2", seed=1)
        index = _FixtureIndex(cfg.images_dir)
        editor, _, vlm = stub_clients(cfg.images_dir)
        segmenter = StubSegmenter(index, fail_names={"photo_001"})
        store = CandidateStore(cfg.store_dir)
        candidates = run_stage2_candidates(cfg, editor, segmenter, vlm, store)
        assert len(candidates) == 5
        audit = (cfg.store_dir / "audit.jsonl").read_text().splitlines()
        assert any("photo_001" in line and "empty" in line for line in audit)

    def test_finalize_mentions_scribble_color(self, stage2_setup):
        from scribbleforge.scribble import color_name

        cfg, editor, segmenter, vlm = stage2_setup
        store = CandidateStore(cfg.store_dir)
        for c in run_stage2_candidates(cfg, editor, segmenter, vlm, store):
            assert color_name(c.scribble.color) in c.instruction


class TestCandidateStore:
    def _seeded_store(self, tmp_path):
        cfg = Stage2Config(images_dir=FIXTURES / "real", store_dir=tmp_path / "store", seed=1)
        store = CandidateStore(cfg.store_dir)
        run_stage2_candidates(cfg, *stub_clients(cfg.images_dir), store)
        return store

    def test_lease_exclusivity(self, tmp_path):
        store = self._seeded_store(tmp_path)
        now = 1000.0
        a = store.lease_pending("alice", 3, now=now)
        b = store.lease_pending("bob", 3, now=now)
        ids_a = {s.entry.id for s in a}
        ids_b = {s.entry.id for s in b}
        assert ids_a and ids_b
        assert not ids_a & ids_b

    def test_expired_leases_return_to_pending(self, tmp_path):
        store = CandidateStore(tmp_path / "s", lease_seconds=10)
        cfg = Stage2Config(images_dir=FIXTURES / "real", store_dir=tmp_path / "s", seed=1)
        run_stage2_candidates(cfg, *stub_clients(cfg.images_dir), store)
        first = store.lease_pending("alice", 2, now=0.0)
        again = store.lease_pending("bob", 6, now=5.0)
        assert {s.entry.id for s in first}.isdisjoint({s.entry.id for s in again})
        later = store.lease_pending("carol", 6, now=11.0)
        assert {s.entry.id for s in first} <= {s.entry.id for s in later} | {
            s.entry.id for s in store.list("pending") if s.lease_active(11.0)
        }

    def test_decide_requires_lease(self, tmp_path):
        store = self._seeded_store(tmp_path)
        cid = store.list("pending")[0].entry.id
        with pytest.raises(CandidateConflictError):
            store.decide(cid, "alice", "accept", now=0.0)
        store.lease_pending("alice", 1, now=0.0)
        store.decide(cid, "alice", "accept", now=1.0)
        assert store.get(cid).status == "accepted"
        with pytest.raises(CandidateConflictError):
            store.decide(cid, "alice", "reject", now=2.0)

    def test_unknown_candidate(self, tmp_path):
        store = self._seeded_store(tmp_path)
        with pytest.raises(UnknownCandidateError):
            store.decide("nope", "alice", "accept", now=0.0)

    def test_strokes_rerender_and_instruction(self, tmp_path):
        from scribbleforge.scribble import PALETTE

        store = self._seeded_store(tmp_path)
        leased = store.lease_pending("alice", 1, now=0.0)
        cid = leased[0].entry.id
        color = PALETTE[5][1]
        strokes = [
            {"points": [[10, 10], [60, 14], [80, 40]], "color": list(color), "thickness": 4}
        ]
        state = store.add_strokes(cid, "alice", strokes, now=1.0)
        assert state.strokes == strokes
        img = load_png(store.asset_path(cid, "input"))
        hit = np.all(img.array[..., :3] == np.asarray(color, dtype=np.uint8), axis=-1)
        assert hit.any()
        from scribbleforge.scribble import color_name

        assert color_name(color) in state.instruction

    def test_stroke_validation(self, tmp_path):
        store = self._seeded_store(tmp_path)
        store.lease_pending("alice", 1, now=0.0)
        cid = store.list("pending")[0].entry.id
        with pytest.raises(StrokeValidationError):
            store.add_strokes(cid, "alice", [], now=0.5)
        with pytest.raises(StrokeValidationError):
            store.add_strokes(
                cid, "alice", [{"points": [[1, 1]], "color": [240, 16, 16], "thickness": 3}], now=0.5
            )
        with pytest.raises(StrokeValidationError):
            store.add_strokes(
                cid,
                "alice",
                [{"points": [[1, 1], [5, 5]], "color": [1, 2, 3], "thickness": 3}],
                now=0.5,
            )

    def test_kill_and_replay_reconstructs_state(self, tmp_path):
        from scribbleforge.scribble import PALETTE

        store = self._seeded_store(tmp_path)
        leased = store.lease_pending("alice", 3, now=100.0)
        store.decide(leased[0].entry.id, "alice", "accept", now=101.0)
        store.decide(leased[1].entry.id, "alice", "reject", now=102.0)
        store.add_strokes(
            leased[2].entry.id,
            "alice",
            [{"points": [[5, 5], [40, 40]], "color": list(PALETTE[2][1]), "thickness": 3}],
            now=103.0,
        )
        want = store.snapshot()
        # "crash": drop the in-memory store and replay the log from disk
        replayed = CandidateStore(store.root)
        assert replayed.snapshot() == want

    def test_export_accepted_without_masks(self, tmp_path):
        store = self._seeded_store(tmp_path)
        leased = store.lease_pending("alice", 2, now=0.0)
        store.decide(leased[0].entry.id, "alice", "accept", now=1.0)
        entries = store.export_accepted()
        assert len(entries) == 1
        assert entries[0].provenance == "real-accepted"
        assert "mask" not in entries[0].assets


class TestExport:
    def test_splits(self, tmp_path):
        s1 = tmp_path / "s1"
        run_stage1_synth(stage1_cfg(s1, count=6, seed=7))
        cfg = Stage2Config(images_dir=FIXTURES / "real", store_dir=tmp_path / "store", seed=1)
        store = CandidateStore(cfg.store_dir)
        run_stage2_candidates(cfg, *stub_clients(cfg.images_dir), store)
        leased = store.lease_pending("rev", 2, now=0.0)
        store.decide(leased[0].entry.id, "rev", "accept", now=1.0)
        store.decide(leased[1].entry.id, "rev", "reject", now=1.0)

        out1, out2 = tmp_path / "split1", tmp_path / "split2"
        m1, m2 = export_training_splits([s1], cfg.store_dir, out1, out2)
        assert len(m1) == 6 and len(m2) == 1
        back1 = manifest_read(out1)
        back2 = manifest_read(out2)
        assert all("mask" in e.assets for e in back1)
        assert all("mask" not in e.assets for e in back2)
        assert all(e.provenance == "real-accepted" for e in back2)
        assert len(back1) == len(out1.joinpath("manifest.jsonl").read_text().splitlines())

    def test_all_rejected_gives_empty_stage2(self, tmp_path):
        s1 = tmp_path / "s1"
        run_stage1_synth(stage1_cfg(s1, count=4, seed=7))
        cfg = Stage2Config(images_dir=FIXTURES / "real", store_dir=tmp_path / "store", seed=1)
        store = CandidateStore(cfg.store_dir)
        run_stage2_candidates(cfg, *stub_clients(cfg.images_dir), store)
        for state in store.lease_pending("rev", 10, now=0.0):
            store.decide(state.entry.id, "rev", "reject", now=1.0)
        _, m2 = export_training_splits([s1], cfg.store_dir, tmp_path / "o1", tmp_path / "o2")
        assert len(m2) == 0
        assert manifest_read(tmp_path / "o2") == m2
