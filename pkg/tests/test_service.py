import base64
import io
import json
import warnings
from pathlib import Path

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient

from PIL import Image

from scribbleforge import cli
from scribbleforge.pipeline import CandidateStore, Stage2Config, run_stage2_candidates, stub_clients
from scribbleforge.pipeline.review import CandidateStore as Store
from scribbleforge.scribble import PALETTE
from scribbleforge.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def seeded_app(tmp_path):
    store_dir = tmp_path / "store"
    cfg = Stage2Config(images_dir=FIXTURES / "real", store_dir=store_dir, seed=1)
    store = CandidateStore(store_dir, lease_seconds=600)
    run_stage2_candidates(cfg, *stub_clients(cfg.images_dir), store)
    app = create_app(store_dir=None)
    app.state.store = store
    return app, store


class TestReviewApi:
    def test_pending_listing_acquires_leases(self, seeded_app):
        app, store = seeded_app
        with TestClient(app) as client:
            got = client.get("/candidates", params={"limit": 2, "reviewer": "alice"}).json()
            assert len(got) == 2
            for c in got:
                assert c["lease_reviewer"] == "alice"
                assert c["status"] == "pending"

    def test_two_reviewers_get_disjoint_sets(self, seeded_app):
        app, _ = seeded_app
        with TestClient(app) as client:
            a = {c["id"] for c in client.get("/candidates", params={"limit": 3, "reviewer": "a"}).json()}
            b = {c["id"] for c in client.get("/candidates", params={"limit": 3, "reviewer": "b"}).json()}
        assert a and b and not (a & b)

    def test_assets_endpoint_serves_pngs(self, seeded_app):
        app, store = seeded_app
        cid = store.list()[0].entry.id
        with TestClient(app) as client:
            body = client.get(f"/candidates/{cid}/assets").json()
            raw = base64.b64decode(body["input_png"])
            with Image.open(io.BytesIO(raw)) as im:
                assert im.size
            assert body["instruction"]
            assert client.get("/candidates/nope/assets").status_code == 404

    def test_verdict_flow_and_conflicts(self, seeded_app):
        app, store = seeded_app
        with TestClient(app) as client:
            got = client.get("/candidates", params={"limit": 1, "reviewer": "alice"}).json()
            cid = got[0]["id"]
            # bob cannot decide alice's lease
            r = client.post(
                f"/candidates/{cid}/verdict", json={"verdict": "accept", "reviewer": "bob"}
            )
            assert r.status_code == 409
            r = client.post(
                f"/candidates/{cid}/verdict", json={"verdict": "accept", "reviewer": "alice"}
            )
            assert r.status_code == 200 and r.json()["status"] == "accepted"
            # double-decide conflicts
            r = client.post(
                f"/candidates/{cid}/verdict", json={"verdict": "reject", "reviewer": "alice"}
            )
            assert r.status_code == 409
            assert (
                client.post(
                    "/candidates/ghost/verdict", json={"verdict": "accept", "reviewer": "alice"}
                ).status_code
                == 404
            )

    def test_scribble_rerenders_input(self, seeded_app):
        app, store = seeded_app
        color = PALETTE[6][1]
        with TestClient(app) as client:
            cid = client.get("/candidates", params={"limit": 1, "reviewer": "ann"}).json()[0]["id"]
            r = client.post(
                f"/candidates/{cid}/scribble",
                json={
                    "reviewer": "ann",
                    "strokes": [
                        {"points": [[8, 8], [50, 20], [70, 48]], "color": list(color), "thickness": 4}
                    ],
                },
            )
            assert r.status_code == 200
            raw = base64.b64decode(r.json()["input_png"])
            with Image.open(io.BytesIO(raw)) as im:
                arr = np.asarray(im.convert("RGBA"))
            assert np.all(arr[..., :3] == np.array(color), axis=-1).any()

    def test_export_after_accept(self, seeded_app):
        app, _ = seeded_app
        with TestClient(app) as client:
            cid = client.get("/candidates", params={"limit": 1, "reviewer": "x"}).json()[0]["id"]
            client.post(f"/candidates/{cid}/verdict", json={"verdict": "accept", "reviewer": "x"})
            out = client.get("/export").json()
            assert out["count"] == 1
            assert out["entries"][0]["id"] == cid
            assert out["entries"][0]["provenance"] == "real-accepted"

    def test_palette_mirrors_module(self, seeded_app):
        app, _ = seeded_app
        with TestClient(app) as client:
            colors = client.get("/palette").json()["colors"]
        assert [(c["name"], tuple(c["rgb"])) for c in colors] == list(PALETTE)

    def test_state_survives_kill_and_replay_through_api(self, seeded_app, tmp_path):
        app, store = seeded_app
        with TestClient(app) as client:
            ids = [c["id"] for c in client.get("/candidates", params={"limit": 2, "reviewer": "k"}).json()]
            client.post(f"/candidates/{ids[0]}/verdict", json={"verdict": "accept", "reviewer": "k"})
        replayed = Store(store.root)
        assert replayed.snapshot() == store.snapshot()
        assert replayed.get(ids[0]).status == "accepted"

    def test_no_store_means_503(self):
        app = create_app(store_dir=None)
        with TestClient(app) as client:
            assert client.get("/candidates").status_code == 503


class TestJobsApi:
    def test_health(self):
        with TestClient(create_app()) as client:
            assert client.get("/jobs/health").json() == {"status": "ok"}

    def test_judge_spec_parsing(self, tmp_path):
        from scribbleforge.evaljudge import HttpJudge, ReplayJudge
        from scribbleforge.service.jobs_api import _judge_from_spec
        from scribbleforge.textforge import TextGenConfig
        from scribbleforge.textforge.generate import generate_text_dataset

        root = tmp_path / "set"
        generate_text_dataset(TextGenConfig(count=2, seed=5), root)
        assert _judge_from_spec("stub", root).identity.startswith("stub:")
        transcript = tmp_path / "t.jsonl"
        transcript.write_text("")
        assert isinstance(_judge_from_spec(f"replay:{transcript}", root), ReplayJudge)
        assert isinstance(_judge_from_spec("http://judge.example/v1", root), HttpJudge)
        with pytest.raises(ValueError, match="unknown judge spec"):
            _judge_from_spec("magic", root)

    def test_stage1_job_and_bad_path(self, tmp_path):
        with TestClient(create_app()) as client:
            r = client.post(
                "/jobs/stage1-synth",
                json={
                    "count": 4,
                    "seed": 2,
                    "stacks_dir": str(FIXTURES / "stacks"),
                    "objects_dir": str(FIXTURES / "objects"),
                    "out_dir": str(tmp_path / "out"),
                },
            )
            assert r.status_code == 200
            assert r.json()["written"] == 4
            r = client.post(
                "/jobs/stage1-synth",
                json={
                    "count": 4,
                    "seed": 2,
                    "stacks_dir": "/nonexistent",
                    "objects_dir": str(FIXTURES / "objects"),
                    "out_dir": str(tmp_path / "out2"),
                },
            )
            assert r.status_code == 400


class TestCli:
    def test_full_offline_flow(self, tmp_path, capsys):
        s1 = tmp_path / "s1"
        rc = cli.main(
            [
                "stage1-synth",
                "--count",
                "6",
                "--seed",
                "3",
                "--stacks",
                str(FIXTURES / "stacks"),
                "--objects",
                str(FIXTURES / "objects"),
                "--out",
                str(s1),
            ]
        )
        assert rc == 0
        assert (s1 / "manifest.jsonl").is_file()
        rc = cli.main(
            ["mosaic", "--in", str(s1), "--out", str(tmp_path / "mt"), "--k", "2", "--count", "2", "--seed", "1"]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "written: 2" in out

    def test_missing_flags_exit(self):
        with pytest.raises(SystemExit, match="missing required flags"):
            cli.main(["stage1-synth", "--count", "3"])

    def test_config_file_supplies_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "forge.toml"
        cfg.write_text(
            "\n".join(
                [
                    "[text-gen]",
                    "count = 2",
                    'tasks = "ins,del"',
                    f'out = "{tmp_path / "txt"}"',
                    "seed = 9",
                ]
            )
        )
        rc = cli.main(["--config", str(cfg), "text-gen"])
        assert rc == 0
        assert "written: 2" in capsys.readouterr().out

    def test_error_surfaces_detail(self, tmp_path, capsys):
        rc = cli.main(
            [
                "stage1-synth",
                "--count",
                "3",
                "--stacks",
                "/nope",
                "--objects",
                "/nope",
                "--out",
                str(tmp_path / "x"),
            ]
        )
        assert rc == 1
        assert "not found" in capsys.readouterr().err
