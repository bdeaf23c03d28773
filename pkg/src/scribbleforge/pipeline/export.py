"""Training-split export.

Stage 1 merges the synthetic manifests (object, text, mosaic) and requires
edit masks on every entry; stage 2 holds accepted real candidates and never
carries masks (real edits have no reliable exact region). Assets are copied
so each split directory is self-contained.
"""

from __future__ import annotations

import logging
import shutil
from pathlib import Path

from ..manifest import DatasetManifest, ManifestEntry, manifest_read, manifest_write
from .review import CandidateStore

log = logging.getLogger(__name__)


class ExportError(ValueError):
    pass


def _copy_entry_assets(entry: ManifestEntry, src_root: Path, dst_root: Path) -> None:
    for rel in entry.assets.values():
        src = src_root / rel
        dst = dst_root / rel
        dst.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(src, dst)


def export_training_splits(
    stage1_roots: list[str | Path],
    store_root: str | Path | None,
    out_stage1: str | Path,
    out_stage2: str | Path,
) -> tuple[DatasetManifest, DatasetManifest]:
    out_stage1 = Path(out_stage1)
    out_stage2 = Path(out_stage2)

    stage1_entries: list[ManifestEntry] = []
    for root in stage1_roots:
        root = Path(root)
        for entry in manifest_read(root):
            if "mask" not in entry.assets:
                raise ExportError(f"stage-1 entry {entry.id} has no edit mask")
            _copy_entry_assets(entry, root, out_stage1)
            stage1_entries.append(entry)
    stage1 = DatasetManifest(tuple(stage1_entries))
    manifest_write(stage1, out_stage1)

    stage2_entries: list[ManifestEntry] = []
    if store_root is not None:
        store = CandidateStore(store_root)
        for entry in store.export_accepted():
            if "mask" in entry.assets:
                raise ExportError(f"stage-2 entry {entry.id} still carries a mask")
            _copy_entry_assets(entry, store.root, out_stage2)
            stage2_entries.append(entry)
    stage2 = DatasetManifest(tuple(stage2_entries))
    manifest_write(stage2, out_stage2)
    if not stage2_entries:
        log.warning("stage-2 export is empty: no accepted candidates")

    log.info(
        "exported %d stage-1 and %d stage-2 samples", len(stage1_entries), len(stage2_entries)
    )
    return stage1, stage2
