"""Stage-1 synthetic generation: layer edits on stacks with exact supervision.

Per sample: pick a stack and task, apply the layer edit, composite both
frames, fit and render a scribble anchored to the edited layer, write the
instruction, derive the exact pixel mask, and persist everything. Each
sample draws from its own child rng stream, so a process pool over sample
indices produces the same dataset as a serial run.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import compositor as comp
from ..editloss import edit_mask
from ..images import ImageBuffer, load_png
from ..instructions import (
    HttpTextGen,
    InstructionContext,
    generate_llm_instruction,
    render_template_instruction,
)
from ..manifest import DatasetManifest, ManifestEntry, manifest_write, save_sample
from ..rng import Rng
from ..samples import TASK_ALIASES, EditSample, EditTask, Provenance
from ..scribble import FitConfig, add_distractors, fit_template, render_scribble, template_library
from .config import Stage1Config

log = logging.getLogger(__name__)

TASK_CODES = {t: a for a, t in TASK_ALIASES.items()}


class Stage1YieldError(RuntimeError):
    pass


def _load_stacks(stacks_dir: Path) -> list[comp.LayerStack]:
    stacks = []
    for p in sorted(Path(stacks_dir).iterdir()):
        if p.is_dir() and (p / comp.STACK_META).is_file():
            stacks.append(comp.load_stack(p))
    if not stacks:
        raise Stage1YieldError(f"no layer stacks under {stacks_dir}")
    return stacks


def _load_objects(objects_dir: Path) -> list[tuple[str, ImageBuffer]]:
    pool = []
    for p in sorted(Path(objects_dir).glob("*.png")):
        pool.append((p.stem.replace("_", " "), load_png(p)))
    if not pool:
        raise Stage1YieldError(f"no object assets under {objects_dir}")
    return pool


def _eligible_layers(stack: comp.LayerStack) -> list[int]:
    out = []
    for i, layer in enumerate(stack.layers):
        if layer.name == "backdrop":
            continue
        if (layer.image.array[..., 3] > 8).any():
            out.append(i)
    return out


def _direction_phrase(dx: int, dy: int) -> str:
    horiz = "to the left" if dx < 0 else "to the right" if dx > 0 else ""
    vert = "up" if dy < 0 else "down" if dy > 0 else ""
    if horiz and vert:
        return f"{vert} and {horiz}"
    return horiz or vert or "to the side"


def _scaled_asset(asset: ImageBuffer, side: int) -> ImageBuffer:
    scale = side / max(asset.width, asset.height)
    w = max(1, int(round(asset.width * scale)))
    h = max(1, int(round(asset.height * scale)))
    return ImageBuffer.from_array(comp._nearest_scale(asset.array, h, w))


def generate_stage1_sample(
    stacks: list[comp.LayerStack],
    objects: list[tuple[str, ImageBuffer]],
    task: EditTask,
    rng: Rng,
    cfg: Stage1Config,
    sample_id: str,
    llm_client=None,
) -> EditSample:
    """One synthetic sample; raises CompositorError/ScribbleError on bad draws."""
    stack = stacks[rng.integers(0, len(stacks))]
    eligible = _eligible_layers(stack)
    if not eligible and task != EditTask.ADDITION:
        raise comp.CompositorError("stack has no editable layers")

    extras: dict = {}
    if task == EditTask.ADDITION:
        noun, asset = objects[rng.integers(0, len(objects))]
        side = rng.integers(26, 48)
        scaled = _scaled_asset(asset, side)
        x = rng.integers(2, max(3, stack.width - scaled.width - 2))
        y = rng.integers(2, max(3, stack.height - scaled.height - 2))
        params = comp.LayerEditParams(layer_index=0, asset=scaled, offset=(x, y), name=noun)
        object_desc = f"a {noun}"
    elif task == EditTask.REMOVAL:
        idx = eligible[rng.integers(0, len(eligible))]
        params = comp.LayerEditParams(layer_index=idx)
        object_desc = stack.layers[idx].name
    elif task == EditTask.REPLACEMENT:
        idx = eligible[rng.integers(0, len(eligible))]
        current = stack.layers[idx].name
        candidates = [o for o in objects if o[0] != current] or objects
        noun, asset = candidates[rng.integers(0, len(candidates))]
        params = comp.LayerEditParams(layer_index=idx, asset=asset, name=noun)
        object_desc = current
        extras["replacement"] = f"a {noun}"
    elif task == EditTask.TRANSLATION:
        idx = eligible[rng.integers(0, len(eligible))]
        sign = lambda: 1 if rng.uniform() < 0.5 else -1
        dx = sign() * rng.integers(10, 32)
        dy = sign() * rng.integers(10, 32)
        if rng.uniform() < 0.3:
            dx = 0
        elif rng.uniform() < 0.3:
            dy = 0
        params = comp.LayerEditParams(layer_index=idx, translation=(dx, dy))
        object_desc = stack.layers[idx].name
        extras["direction"] = _direction_phrase(dx, dy)
    else:
        raise comp.CompositorError(f"{task.value} is not a stage-1 object task")

    edited, changed = comp.apply_layer_edit(stack, task, params)
    before = comp.composite(stack)
    after = comp.composite(edited)

    # scribble anchors to the edited layer: for additions, where the object
    # lands; otherwise the original layer's visible support
    if task == EditTask.ADDITION:
        anchor = comp.layer_bbox(edited, len(edited.layers) - 1)
    else:
        anchor = comp.layer_bbox(stack, params.layer_index)

    lib = template_library()
    template = lib[rng.choice(sorted(lib))]
    spec = fit_template(template, anchor, rng, FitConfig(thickness_range=(2, 5)))
    scribbled = render_scribble(before, spec)

    distractors = []
    if cfg.distractor_max > 0:
        n = rng.integers(1, cfg.distractor_max + 1)
        scribbled, distractors = add_distractors(scribbled, n, spec.color, rng.spawn("distract"))

    from ..scribble import color_name

    ctx = InstructionContext(
        task=task,
        scribble_kind=template.kind,
        color_name=color_name(spec.color),
        object_desc=object_desc,
        extras=extras,
    )
    if llm_client is not None:
        instruction = generate_llm_instruction(ctx, llm_client, seed=rng.bits64() % 2**31)
    else:
        instruction = render_template_instruction(ctx, rng.spawn("instruction"))

    mask = edit_mask(before, after, tau=cfg.tau, factor=1).pixel

    return EditSample(
        id=sample_id,
        input=scribbled,
        instruction=instruction,
        target=after,
        scribble=spec,
        task=task,
        provenance=Provenance.SYNTHETIC,
        edit_mask=mask,
        base=before,
        changed_region=changed,
        seed=rng.seed,
        extra={
            "instruction_ctx": ctx.to_json(),
            "template": template.id,
            "distractors": [d.to_json() for d in distractors],
        },
    )


_WORKER: dict = {}


def _worker_init(stacks_dir: str, objects_dir: str) -> None:
    _WORKER["stacks"] = _load_stacks(Path(stacks_dir))
    _WORKER["objects"] = _load_objects(Path(objects_dir))


def _worker_generate(args: tuple) -> dict | None:
    cfg, index = args
    entry = _generate_and_save(
        _WORKER["stacks"], _WORKER["objects"], cfg, index, llm_client=None
    )
    return None if entry is None else entry.to_json()


def _generate_and_save(stacks, objects, cfg: Stage1Config, index: int, llm_client):
    task = cfg.tasks[index % len(cfg.tasks)]
    sample_id = f"s1-{TASK_CODES[task]}-{cfg.seed:08x}-{index:05d}"
    base_rng = Rng(cfg.seed, f"stage1/{index}")
    for attempt in range(cfg.retries):
        rng = base_rng.spawn(f"try{attempt}")
        try:
            sample = generate_stage1_sample(
                stacks, objects, task, rng, cfg, sample_id, llm_client
            )
            return save_sample(sample, cfg.out_dir)
        except Exception as err:  # bad geometry draws are re-rolled, then skipped
            last = err
    log.warning("stage1 sample %s skipped after %d tries: %s", sample_id, cfg.retries, last)
    return None


def run_stage1_synth(cfg: Stage1Config) -> DatasetManifest:
    """Generate ``cfg.count`` samples and write the manifest; fails under 50% yield."""
    llm_client = HttpTextGen(cfg.llm_url) if cfg.llm_url else None
    entries: list[ManifestEntry | None] = []

    if cfg.workers > 1 and llm_client is None:
        jobs = [(cfg, i) for i in range(cfg.count)]
        with ProcessPoolExecutor(
            max_workers=cfg.workers,
            initializer=_worker_init,
            initargs=(str(cfg.stacks_dir), str(cfg.objects_dir)),
        ) as pool:
            for raw in pool.map(_worker_generate, jobs, chunksize=16):
                entries.append(None if raw is None else ManifestEntry.from_json(raw))
    else:
        stacks = _load_stacks(cfg.stacks_dir)
        objects = _load_objects(cfg.objects_dir)
        for i in range(cfg.count):
            entries.append(_generate_and_save(stacks, objects, cfg, i, llm_client))

    kept = [e for e in entries if e is not None]
    if len(kept) < cfg.min_yield * cfg.count:
        raise Stage1YieldError(
            f"only {len(kept)}/{cfg.count} samples generated (need {cfg.min_yield:.0%})"
        )
    manifest = DatasetManifest(tuple(kept))
    manifest_write(manifest, cfg.out_dir)
    return manifest
