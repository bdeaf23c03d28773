"""Stage orchestration: synthetic generation, real-image candidates, review, export."""

from .config import (
    EvalStageConfig,
    MosaicStageConfig,
    Stage1Config,
    Stage2Config,
    TextStageConfig,
    TrainToyConfig,
    load_config_file,
)
from .export import export_training_splits
from .mosaic_stage import build_mosaics
from .review import (
    CandidateConflictError,
    CandidateStore,
    StrokeValidationError,
    UnknownCandidateError,
)
from .stage1 import Stage1YieldError, generate_stage1_sample, run_stage1_synth
from .stage2 import (
    EditorClient,
    SegmenterClient,
    StubEditor,
    StubSegmenter,
    StubVlm,
    VlmClient,
    run_stage2_candidates,
    stub_clients,
)

__all__ = [
    "Stage1Config",
    "Stage2Config",
    "TextStageConfig",
    "MosaicStageConfig",
    "TrainToyConfig",
    "EvalStageConfig",
    "load_config_file",
    "run_stage1_synth",
    "generate_stage1_sample",
    "Stage1YieldError",
    "build_mosaics",
    "EditorClient",
    "SegmenterClient",
    "VlmClient",
    "StubEditor",
    "StubSegmenter",
    "StubVlm",
    "stub_clients",
    "run_stage2_candidates",
    "CandidateStore",
    "CandidateConflictError",
    "UnknownCandidateError",
    "StrokeValidationError",
    "export_training_splits",
]
