"""Pydantic request/response models for the forge service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class CandidateView(BaseModel):
    id: str
    instruction: str
    status: str
    task: str
    color: tuple[int, int, int]
    lease_reviewer: Optional[str] = None
    lease_expiry: Optional[float] = None


class CandidateAssets(BaseModel):
    id: str
    instruction: str
    status: str
    input_png: str  # base64 PNG
    target_png: str
    base_png: Optional[str] = None


class VerdictIn(BaseModel):
    verdict: Literal["accept", "reject"]
    reviewer: str


class StrokeIn(BaseModel):
    points: list[tuple[float, float]] = Field(min_length=2)
    color: tuple[int, int, int]
    thickness: int = Field(ge=1)


class ScribbleIn(BaseModel):
    strokes: list[StrokeIn] = Field(min_length=1)
    reviewer: str


class PaletteColor(BaseModel):
    name: str
    rgb: tuple[int, int, int]


class PaletteOut(BaseModel):
    colors: list[PaletteColor]


class ExportOut(BaseModel):
    count: int
    entries: list[dict]


class Stage1JobIn(BaseModel):
    count: int = Field(ge=1)
    seed: int = 0
    stacks_dir: str
    objects_dir: str
    out_dir: str
    workers: int = 1
    tasks: Optional[list[str]] = None
    distractor_max: int = 0
    tau: int = 8
    llm_url: Optional[str] = None


class TextGenJobIn(BaseModel):
    count: int = Field(ge=1)
    seed: int = 0
    out_dir: str
    tasks: Optional[list[str]] = None


class GenJobOut(BaseModel):
    manifest: str
    written: int
    requested: int


class MosaicJobIn(BaseModel):
    manifest_root: str
    out_dir: str
    count: int = Field(ge=1)
    seed: int = 0
    k: list[int] = [2, 4]


class TrainToyJobIn(BaseModel):
    manifest_root: str
    lam: float = Field(default=0.1, ge=0)
    steps: int = Field(default=2000, ge=0)
    seed: int = 0
    factor: int = 8
    report_path: Optional[str] = None


class TrainToyJobOut(BaseModel):
    steps: int
    first_whole: Optional[float]
    final_whole: Optional[float]
    eval_mse_in_mask: float
    eval_mse_out_mask: float
    report_path: Optional[str] = None


class EvalJobIn(BaseModel):
    manifest_root: str
    outputs_dir: str
    judge: str = "stub"  # stub | replay:<path> | http:<url>
    repeats: int = Field(default=3, ge=1)
    report_path: Optional[str] = None


class EvalJobOut(BaseModel):
    overall_mean: float
    tasks: dict[str, dict[str, float]]
    flagged: dict[str, str]
    table: str
    report_path: Optional[str] = None


class Stage2JobIn(BaseModel):
    images_dir: str
    store_dir: str
    seed: int = 0
    editor_url: Optional[str] = None
    segmenter_url: Optional[str] = None
    vlm_url: Optional[str] = None


class Stage2JobOut(BaseModel):
    candidates: int
    skipped: int


class ExportJobIn(BaseModel):
    stage1_roots: list[str]
    store_dir: Optional[str] = None
    out_stage1: str
    out_stage2: str


class ExportJobOut(BaseModel):
    stage1_count: int
    stage2_count: int
