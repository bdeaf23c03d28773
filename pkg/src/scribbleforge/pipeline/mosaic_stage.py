"""Mosaic batch construction from a single-task manifest."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..images import save_mask_png, save_png
from ..manifest import (
    MULTI_TASK_KIND,
    DatasetManifest,
    ManifestEntry,
    asset_dir,
    load_sample,
    manifest_read,
    manifest_write,
)
from ..mosaicker import MultiTaskSample, choose_layout, distinct_color_parts, mosaic
from ..rng import Rng
from .config import MosaicStageConfig

log = logging.getLogger(__name__)


def save_multitask(sample: MultiTaskSample, root: str | Path) -> ManifestEntry:
    root = Path(root)
    rel = asset_dir(sample.id)
    assets = {"input": f"{rel}/input.png", "target": f"{rel}/target.png"}
    save_png(sample.input, root / assets["input"])
    save_png(sample.target, root / assets["target"])
    if sample.edit_mask is not None:
        assets["mask"] = f"{rel}/mask.png"
        save_mask_png(sample.edit_mask, root / assets["mask"])
    return ManifestEntry(
        id=sample.id,
        assets=assets,
        instruction=sample.instruction,
        task=MULTI_TASK_KIND,
        color=sample.parts[0][2],
        provenance="synthetic",
        seed=sample.seed,
        extra={
            "grid": sample.layout.grid,
            "cell": list(sample.layout.cell),
            "parts": [
                {"id": pid, "cell": cell, "color": list(color)}
                for pid, cell, color in sample.parts
            ],
        },
    )


def build_mosaics(cfg: MosaicStageConfig) -> DatasetManifest:
    """Assemble ``cfg.count`` mosaics from the single-task manifest."""
    source = manifest_read(cfg.manifest_root)
    singles = [e for e in source if e.task != MULTI_TASK_KIND]
    if len(singles) < 2:
        raise ValueError("need at least 2 single-task samples to mosaic")

    entries = []
    for i in range(cfg.count):
        rng = Rng(cfg.seed, f"mosaic/{i}")
        k = cfg.k_values[rng.integers(0, len(cfg.k_values))]
        picked_idx = []
        while len(picked_idx) < k:
            j = rng.integers(0, len(singles))
            if j not in picked_idx:
                picked_idx.append(j)
        parts = [load_sample(singles[j], cfg.manifest_root) for j in picked_idx]
        parts = distinct_color_parts(parts, rng.spawn("colors"))
        cell = (parts[0].input.width, parts[0].input.height)
        layout = choose_layout(k, cell, rng.spawn("layout"))
        sample = mosaic(
            parts,
            layout,
            rng.spawn("join"),
            sample_id=f"mt{k}-{cfg.seed:08x}-{i:05d}",
        )
        entries.append(save_multitask(sample, cfg.out_dir))
    manifest = DatasetManifest(tuple(entries))
    manifest_write(manifest, cfg.out_dir)
    return manifest
