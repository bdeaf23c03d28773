"""Stage configuration dataclasses and the TOML config-file loader.

The config file mirrors CLI flags, one table per subcommand::

    [stage1-synth]
    count = 100
    seed = 7
    stacks = "fixtures/stacks"

CLI flags win over file values; env vars cover live service endpoints
(FORGE_JUDGE_URL, FORGE_EDITOR_URL, FORGE_SEGMENTER_URL, FORGE_VLM_URL,
FORGE_LLM_URL).
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from ..samples import OBJECT_TASKS, TEXT_TASKS, EditTask

if sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib
else:
    import tomli as tomllib

ENV_JUDGE_URL = "FORGE_JUDGE_URL"
ENV_EDITOR_URL = "FORGE_EDITOR_URL"
ENV_SEGMENTER_URL = "FORGE_SEGMENTER_URL"
ENV_VLM_URL = "FORGE_VLM_URL"
ENV_LLM_URL = "FORGE_LLM_URL"


class ConfigError(ValueError):
    pass


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no config file at {path}")
    with path.open("rb") as f:
        return tomllib.load(f)


def env_url(name: str) -> str | None:
    value = os.environ.get(name, "").strip()
    return value or None


def _require_dir(path: str | Path, what: str) -> Path:
    path = Path(path)
    if not path.is_dir():
        raise ConfigError(f"{what} directory not found: {path}")
    return path


@dataclass(frozen=True)
class Stage1Config:
    count: int
    seed: int
    stacks_dir: Path
    objects_dir: Path
    out_dir: Path
    tasks: tuple[EditTask, ...] = OBJECT_TASKS
    workers: int = 1
    tau: int = 8
    distractor_max: int = 0  # 0 disables distractor scribbles
    retries: int = 6
    min_yield: float = 0.5
    llm_url: str | None = None

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigError("count must be >= 1")
        _require_dir(self.stacks_dir, "stacks")
        _require_dir(self.objects_dir, "objects")


@dataclass(frozen=True)
class TextStageConfig:
    count: int
    seed: int
    out_dir: Path
    tasks: tuple[EditTask, ...] = TEXT_TASKS


@dataclass(frozen=True)
class MosaicStageConfig:
    manifest_root: Path
    out_dir: Path
    count: int
    seed: int
    k_values: tuple[int, ...] = (2, 4)

    def __post_init__(self) -> None:
        for k in self.k_values:
            if k not in (2, 4):
                raise ConfigError(f"k must be 2 or 4, got {k}")


@dataclass(frozen=True)
class TrainToyConfig:
    manifest_root: Path
    lam: float = 0.1
    steps: int = 2000
    seed: int = 0
    report_path: Path | None = None
    factor: int = 8


@dataclass(frozen=True)
class EvalStageConfig:
    manifest_root: Path
    outputs_dir: Path
    judge: str = "stub"  # stub | replay:<file> | http:<url>
    repeats: int = 3
    report_path: Path | None = None


@dataclass(frozen=True)
class Stage2Config:
    images_dir: Path
    store_dir: Path
    seed: int = 0
    editor_url: str | None = None
    segmenter_url: str | None = None
    vlm_url: str | None = None

    def __post_init__(self) -> None:
        _require_dir(self.images_dir, "real images")
