import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scribbleforge.images import ImageBuffer, save_png
from scribbleforge.manifest import (
    DatasetManifest,
    ManifestEntry,
    ManifestError,
    manifest_read,
    manifest_write,
)
from scribbleforge.samples import EditTask, Provenance

TASKS = [t.value for t in EditTask]
PROVS = [p.value for p in Provenance]

ids = st.text(alphabet="abcdefghij0123456789-", min_size=1, max_size=16)
colors = st.tuples(
    st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)
)


def entry_strategy(sample_id):
    return st.builds(
        ManifestEntry,
        id=st.just(sample_id),
        assets=st.just(
            {"input": f"assets/{sample_id}/input.png", "target": f"assets/{sample_id}/target.png"}
        ),
        instruction=st.text(min_size=1, max_size=80).filter(lambda s: s.strip()),
        task=st.sampled_from(TASKS),
        color=colors,
        provenance=st.sampled_from(PROVS),
        seed=st.integers(0, 2**63 - 1),
        extra=st.dictionaries(
            st.sampled_from(["note", "origin", "k"]),
            st.one_of(st.integers(-5, 5), st.text(max_size=10)),
            max_size=2,
        ),
    )


def manifests():
    return (
        st.lists(ids, unique=True, max_size=8)
        .flatmap(lambda idlist: st.tuples(*[entry_strategy(i) for i in idlist]))
        .map(DatasetManifest)
    )


def _materialize_assets(manifest, root):
    px = ImageBuffer.filled(2, 2, (1, 2, 3, 255))
    for e in manifest:
        for rel in e.assets.values():
            save_png(px, root / rel)


def test_empty_manifest_round_trip(tmp_path):
    m = DatasetManifest(())
    path = manifest_write(m, tmp_path)
    assert path.read_text() == ""
    assert manifest_read(tmp_path) == m


def test_three_entries_in_order(tmp_path):
    entries = []
    for i in range(3):
        e = ManifestEntry(
            id=f"s{i}",
            assets={"input": f"assets/s{i}/input.png", "target": f"assets/s{i}/target.png"},
            instruction=f"edit {i}",
            task="removal",
            color=(240, 16, 16),
            provenance="synthetic",
            seed=i,
        )
        entries.append(e)
    m = DatasetManifest(tuple(entries))
    _materialize_assets(m, tmp_path)
    path = manifest_write(m, tmp_path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert [json.loads(l)["id"] for l in lines] == ["s0", "s1", "s2"]


@settings(max_examples=40, deadline=None)
@given(manifests())
def test_round_trip_random_manifests(tmp_path_factory, m):
    root = tmp_path_factory.mktemp("m")
    _materialize_assets(m, root)
    manifest_write(m, root)
    back = manifest_read(root)
    assert back == m


def test_missing_asset_names_the_sample(tmp_path):
    e = ManifestEntry(
        id="lost",
        assets={"input": "assets/lost/input.png", "target": "assets/lost/target.png"},
        instruction="x",
        task="addition",
        color=(0, 0, 0),
        provenance="synthetic",
        seed=0,
    )
    with pytest.raises(ManifestError, match="lost"):
        manifest_write(DatasetManifest((e,)), tmp_path)


def test_duplicate_id_rejected():
    e = ManifestEntry(
        id="dup",
        assets={"input": "a.png", "target": "b.png"},
        instruction="x",
        task="addition",
        color=(0, 0, 0),
        provenance="synthetic",
        seed=0,
    )
    with pytest.raises(ManifestError, match="duplicate"):
        DatasetManifest((e, e))


def test_missing_instruction_field_reports_line(tmp_path):
    good = {
        "id": "a",
        "assets": {"input": "i.png", "target": "t.png"},
        "instruction": "ok",
        "task": "removal",
        "color": [1, 2, 3],
        "provenance": "synthetic",
        "seed": 1,
    }
    bad = {k: v for k, v in good.items() if k != "instruction"}
    bad["id"] = "b"
    text = json.dumps(good) + "\n" + json.dumps(bad) + "\n"
    (tmp_path / "manifest.jsonl").write_text(text)
    with pytest.raises(ManifestError, match=":2"):
        manifest_read(tmp_path)


def test_unknown_task_kind_rejected(tmp_path):
    raw = {
        "id": "a",
        "assets": {"input": "i.png", "target": "t.png"},
        "instruction": "ok",
        "task": "teleport",
        "color": [1, 2, 3],
        "provenance": "synthetic",
        "seed": 1,
    }
    (tmp_path / "manifest.jsonl").write_text(json.dumps(raw) + "\n")
    with pytest.raises(ManifestError, match="teleport"):
        manifest_read(tmp_path)


def test_malformed_line_reports_index(tmp_path):
    (tmp_path / "manifest.jsonl").write_text('{"id": "a"\n')
    with pytest.raises(ManifestError, match=":1"):
        manifest_read(tmp_path)


def test_real_accepted_provenance_preserved(tmp_path):
    e = ManifestEntry(
        id="r1",
        assets={"input": "assets/r1/input.png", "target": "assets/r1/target.png"},
        instruction="fix it",
        task="removal",
        color=(16, 240, 16),
        provenance="real-accepted",
        seed=7,
    )
    m = DatasetManifest((e,))
    _materialize_assets(m, tmp_path)
    manifest_write(m, tmp_path)
    back = manifest_read(tmp_path)
    assert back.entries[0].provenance == "real-accepted"
    assert Provenance(back.entries[0].provenance) == Provenance.REAL_ACCEPTED
