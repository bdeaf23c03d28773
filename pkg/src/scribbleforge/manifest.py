"""JSONL dataset manifests with PNG assets referenced by relative path.

Layout convention::

    root/
      manifest.jsonl
      assets/{id}/input.png     scribbled input
      assets/{id}/target.png    edited target
      assets/{id}/mask.png      optional binary edit mask
      assets/{id}/base.png      optional pre-scribble input

One JSON object per line, keys sorted, so manifests diff cleanly and
re-reading a written manifest reproduces it field for field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import images
from .images import RGB, ImageBuffer
from .samples import EditSample, EditTask, Provenance, SampleError
from .scribble import ScribbleSpec

MANIFEST_NAME = "manifest.jsonl"

# Mosaicked entries are not a single edit kind; they carry their parts in `extra`.
MULTI_TASK_KIND = "multi"
_KNOWN_TASKS = {t.value for t in EditTask} | {MULTI_TASK_KIND}
_KNOWN_PROVENANCE = {p.value for p in Provenance}
_REQUIRED_FIELDS = ("id", "assets", "instruction", "task", "color", "provenance", "seed")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    assets: dict[str, str]  # role -> relative path (input/target required)
    instruction: str
    task: str  # EditTask value or MULTI_TASK_KIND
    color: RGB
    provenance: str
    seed: int
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.task not in _KNOWN_TASKS:
            raise ManifestError(f"entry {self.id}: unknown task kind {self.task!r}")
        if self.provenance not in _KNOWN_PROVENANCE:
            raise ManifestError(f"entry {self.id}: unknown provenance {self.provenance!r}")
        if not self.instruction:
            raise ManifestError(f"entry {self.id}: missing instruction")
        for role in ("input", "target"):
            if role not in self.assets:
                raise ManifestError(f"entry {self.id}: missing {role} asset path")

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "assets": dict(self.assets),
            "instruction": self.instruction,
            "task": self.task,
            "color": list(self.color),
            "provenance": self.provenance,
            "seed": self.seed,
        }
        if self.extra:
            out["extra"] = self.extra
        return out

    @staticmethod
    def from_json(raw: dict) -> "ManifestEntry":
        missing = [k for k in _REQUIRED_FIELDS if k not in raw]
        if missing:
            raise ManifestError(f"missing fields: {', '.join(missing)}")
        return ManifestEntry(
            id=str(raw["id"]),
            assets={str(k): str(v) for k, v in raw["assets"].items()},
            instruction=str(raw["instruction"]),
            task=str(raw["task"]),
            color=tuple(int(c) for c in raw["color"]),
            provenance=str(raw["provenance"]),
            seed=int(raw["seed"]),
            extra=dict(raw.get("extra", {})),
        )

    def edit_task(self) -> EditTask | None:
        return None if self.task == MULTI_TASK_KIND else EditTask(self.task)


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for e in self.entries:
            if e.id in seen:
                raise ManifestError(f"duplicate sample id {e.id!r}")
            seen.add(e.id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def by_id(self, sample_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.id == sample_id:
                return e
        raise KeyError(sample_id)


def manifest_write(manifest: DatasetManifest, root: str | Path) -> Path:
    """Write ``manifest.jsonl`` under ``root``; every referenced asset must exist."""
    root = Path(root)
    for e in manifest:
        for role, rel in e.assets.items():
            if not (root / rel).is_file():
                raise ManifestError(f"entry {e.id}: {role} asset missing at {rel}")
    path = root / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for e in manifest:
            f.write(json.dumps(e.to_json(), sort_keys=True, ensure_ascii=False))
            f.write("\n")
    return path


def manifest_read(root: str | Path) -> DatasetManifest:
    root = Path(root)
    path = root if root.name.endswith(".jsonl") else root / MANIFEST_NAME
    if not path.is_file():
        raise ManifestError(f"no manifest at {path}")
    entries = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as err:
                raise ManifestError(f"{path}:{lineno}: not valid JSON ({err.msg})") from None
            try:
                entries.append(ManifestEntry.from_json(raw))
            except (ManifestError, KeyError, TypeError, ValueError) as err:
                raise ManifestError(f"{path}:{lineno}: {err}") from None
    return DatasetManifest(tuple(entries))


def asset_dir(sample_id: str) -> str:
    return f"assets/{sample_id}"


def save_sample(sample: EditSample, root: str | Path) -> ManifestEntry:
    """Persist a sample's PNGs under ``root`` and return its manifest entry."""
    root = Path(root)
    rel = asset_dir(sample.id)
    assets = {"input": f"{rel}/input.png", "target": f"{rel}/target.png"}
    images.save_png(sample.input, root / assets["input"])
    images.save_png(sample.target, root / assets["target"])
    if sample.edit_mask is not None:
        assets["mask"] = f"{rel}/mask.png"
        images.save_mask_png(sample.edit_mask, root / assets["mask"])
    if sample.base is not None:
        assets["base"] = f"{rel}/base.png"
        images.save_png(sample.base, root / assets["base"])

    extra = dict(sample.extra)
    extra["scribble"] = sample.scribble.to_json()
    if sample.changed_region is not None:
        r = sample.changed_region
        extra["changed_region"] = [r.x, r.y, r.w, r.h]
    return ManifestEntry(
        id=sample.id,
        assets=assets,
        instruction=sample.instruction,
        task=sample.task.value,
        color=sample.scribble.color,
        provenance=sample.provenance.value,
        seed=sample.seed,
        extra=extra,
    )


def load_sample(entry: ManifestEntry, root: str | Path) -> EditSample:
    """Rehydrate an :class:`EditSample` from its manifest entry."""
    from .images import BBox  # local import keeps module deps one-way

    root = Path(root)
    task = entry.edit_task()
    if task is None:
        raise ManifestError(f"entry {entry.id} is a multi-task composite, not an EditSample")
    mask = None
    if "mask" in entry.assets:
        mask = images.load_mask_png(root / entry.assets["mask"])
    base = None
    if "base" in entry.assets:
        base = images.load_png(root / entry.assets["base"])
    extra = dict(entry.extra)
    scribble_raw = extra.pop("scribble", None)
    if scribble_raw is None:
        raise ManifestError(f"entry {entry.id}: no scribble spec recorded")
    region_raw = extra.pop("changed_region", None)
    region = BBox(*region_raw) if region_raw else None
    return EditSample(
        id=entry.id,
        input=images.load_png(root / entry.assets["input"]),
        instruction=entry.instruction,
        target=images.load_png(root / entry.assets["target"]),
        scribble=ScribbleSpec.from_json(scribble_raw),
        task=task,
        provenance=Provenance(entry.provenance),
        edit_mask=mask,
        base=base,
        changed_region=region,
        seed=entry.seed,
        extra=extra,
    )


def iter_samples(root: str | Path, entries: Iterable[ManifestEntry] | None = None):
    root = Path(root)
    manifest = manifest_read(root) if entries is None else entries
    for entry in manifest:
        yield load_sample(entry, root)
