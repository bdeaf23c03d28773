"""Batch-job endpoints: generation, mosaicking, toy training, evaluation, export.

Jobs run synchronously in the request (desk-scale workloads); paths in the
payloads are interpreted on the service host. The CLI drives these same
endpoints, in-process by default.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import APIRouter, HTTPException

from ..editloss import LossConfig, train_toy
from ..evaljudge import HttpJudge, ReplayJudge, StubJudge, run_eval
from ..manifest import load_sample, manifest_read
from ..pipeline import (
    MosaicStageConfig,
    Stage1Config,
    Stage2Config,
    build_mosaics,
    export_training_splits,
    run_stage1_synth,
    run_stage2_candidates,
    stub_clients,
)
from ..pipeline.config import (
    ENV_EDITOR_URL,
    ENV_JUDGE_URL,
    ENV_SEGMENTER_URL,
    ENV_VLM_URL,
    ConfigError,
    env_url,
)
from ..pipeline.review import CandidateStore
from ..pipeline.stage2 import HttpEditor, HttpSegmenter, HttpVlm
from ..rng import Rng
from ..samples import parse_task
from ..textforge import TextGenConfig, generate_text_dataset
from .models import (
    EvalJobIn,
    EvalJobOut,
    ExportJobIn,
    ExportJobOut,
    GenJobOut,
    MosaicJobIn,
    Stage1JobIn,
    Stage2JobIn,
    Stage2JobOut,
    TextGenJobIn,
    TrainToyJobIn,
    TrainToyJobOut,
)

router = APIRouter(prefix="/jobs")


@router.get("/health")
def health():
    return {"status": "ok"}


def _tasks(raw: list[str] | None, default):
    if not raw:
        return default
    return tuple(parse_task(t) for t in raw)


@router.post("/stage1-synth", response_model=GenJobOut)
def stage1_synth(body: Stage1JobIn):
    from ..samples import OBJECT_TASKS

    try:
        cfg = Stage1Config(
            count=body.count,
            seed=body.seed,
            stacks_dir=Path(body.stacks_dir),
            objects_dir=Path(body.objects_dir),
            out_dir=Path(body.out_dir),
            tasks=_tasks(body.tasks, OBJECT_TASKS),
            workers=body.workers,
            tau=body.tau,
            distractor_max=body.distractor_max,
            llm_url=body.llm_url or env_url("FORGE_LLM_URL"),
        )
        manifest = run_stage1_synth(cfg)
    except (ConfigError, ValueError, RuntimeError) as err:
        raise HTTPException(status_code=400, detail=str(err))
    return GenJobOut(
        manifest=str(Path(body.out_dir) / "manifest.jsonl"),
        written=len(manifest),
        requested=body.count,
    )


@router.post("/text-gen", response_model=GenJobOut)
def text_gen(body: TextGenJobIn):
    from ..samples import TEXT_TASKS

    cfg = TextGenConfig(
        count=body.count, seed=body.seed, tasks=_tasks(body.tasks, TEXT_TASKS)
    )
    manifest = generate_text_dataset(cfg, Path(body.out_dir))
    return GenJobOut(
        manifest=str(Path(body.out_dir) / "manifest.jsonl"),
        written=len(manifest),
        requested=body.count,
    )


@router.post("/mosaic", response_model=GenJobOut)
def mosaic_job(body: MosaicJobIn):
    try:
        cfg = MosaicStageConfig(
            manifest_root=Path(body.manifest_root),
            out_dir=Path(body.out_dir),
            count=body.count,
            seed=body.seed,
            k_values=tuple(body.k),
        )
        manifest = build_mosaics(cfg)
    except (ConfigError, ValueError) as err:
        raise HTTPException(status_code=400, detail=str(err))
    return GenJobOut(
        manifest=str(Path(body.out_dir) / "manifest.jsonl"),
        written=len(manifest),
        requested=body.count,
    )


@router.post("/train-toy", response_model=TrainToyJobOut)
def train_toy_job(body: TrainToyJobIn):
    import json

    root = Path(body.manifest_root)
    try:
        manifest = manifest_read(root)
        samples = [
            load_sample(e, root if root.is_dir() else root.parent)
            for e in manifest
            if "mask" in e.assets and e.task != "multi"
        ]
        if not samples:
            raise ValueError("manifest has no masked single-task samples")
        result = train_toy(
            samples,
            steps=body.steps,
            cfg=LossConfig(lam=body.lam),
            rng=Rng(body.seed, "train-toy"),
            factor=body.factor,
        )
    except (ValueError, RuntimeError) as err:
        raise HTTPException(status_code=400, detail=str(err))

    report_path = None
    if body.report_path:
        report_path = Path(body.report_path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(
            json.dumps(
                {
                    "lam": body.lam,
                    "steps": body.steps,
                    "seed": body.seed,
                    "trace": [
                        {"whole": t.whole, "edit": t.edit, "total": t.total}
                        for t in result.trace
                    ],
                    "eval_mse_in_mask": result.eval_mse_in_mask,
                    "eval_mse_out_mask": result.eval_mse_out_mask,
                },
                indent=2,
            )
        )
    return TrainToyJobOut(
        steps=len(result.trace),
        first_whole=result.trace[0].whole if result.trace else None,
        final_whole=result.trace[-1].whole if result.trace else None,
        eval_mse_in_mask=result.eval_mse_in_mask,
        eval_mse_out_mask=result.eval_mse_out_mask,
        report_path=str(report_path) if report_path else None,
    )


def _judge_from_spec(spec: str, manifest_root: Path):
    if spec == "stub":
        return StubJudge(manifest_root)
    if spec.startswith("replay:"):
        return ReplayJudge(spec.split(":", 1)[1])
    if spec.startswith("http:") or spec.startswith("https:"):
        return HttpJudge(spec)
    if spec == "env":
        url = env_url(ENV_JUDGE_URL)
        if not url:
            raise ValueError(f"{ENV_JUDGE_URL} is not set")
        return HttpJudge(url)
    raise ValueError(f"unknown judge spec {spec!r} (stub | replay:<file> | http:<url>)")


@router.post("/eval-text", response_model=EvalJobOut)
def eval_text(body: EvalJobIn):
    root = Path(body.manifest_root)
    root = root if root.is_dir() else root.parent
    try:
        judge = _judge_from_spec(body.judge, root)
        report = run_eval(
            root,
            Path(body.outputs_dir),
            judge,
            repeats=body.repeats,
            report_path=Path(body.report_path) if body.report_path else None,
        )
    except (ValueError, FileNotFoundError) as err:
        raise HTTPException(status_code=400, detail=str(err))
    return EvalJobOut(
        overall_mean=report.overall_mean(),
        tasks=report.task_stats(),
        flagged=report.flagged,
        table=report.table(),
        report_path=body.report_path,
    )


@router.post("/stage2-candidates", response_model=Stage2JobOut)
def stage2_candidates(body: Stage2JobIn):
    try:
        cfg = Stage2Config(
            images_dir=Path(body.images_dir),
            store_dir=Path(body.store_dir),
            seed=body.seed,
            editor_url=body.editor_url or env_url(ENV_EDITOR_URL),
            segmenter_url=body.segmenter_url or env_url(ENV_SEGMENTER_URL),
            vlm_url=body.vlm_url or env_url(ENV_VLM_URL),
        )
    except ConfigError as err:
        raise HTTPException(status_code=400, detail=str(err))
    if cfg.editor_url or cfg.segmenter_url or cfg.vlm_url:
        if not (cfg.editor_url and cfg.segmenter_url and cfg.vlm_url):
            raise HTTPException(
                status_code=400, detail="configure all three client urls or none (stubs)"
            )
        editor = HttpEditor(cfg.editor_url)
        segmenter = HttpSegmenter(cfg.segmenter_url)
        vlm = HttpVlm(cfg.vlm_url)
    else:
        editor, segmenter, vlm = stub_clients(cfg.images_dir)
    store = CandidateStore(cfg.store_dir)
    candidates = run_stage2_candidates(cfg, editor, segmenter, vlm, store)
    photos = [
        p for p in Path(cfg.images_dir).glob("*.png") if not p.name.endswith(".mask.png")
    ]
    return Stage2JobOut(candidates=len(candidates), skipped=len(photos) - len(candidates))


@router.post("/export-splits", response_model=ExportJobOut)
def export_splits(body: ExportJobIn):
    try:
        m1, m2 = export_training_splits(
            [Path(r) for r in body.stage1_roots],
            Path(body.store_dir) if body.store_dir else None,
            Path(body.out_stage1),
            Path(body.out_stage2),
        )
    except (ValueError, FileNotFoundError) as err:
        raise HTTPException(status_code=400, detail=str(err))
    return ExportJobOut(stage1_count=len(m1), stage2_count=len(m2))
