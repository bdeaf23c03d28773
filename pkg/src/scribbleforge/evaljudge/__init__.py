"""Text-editing evaluation harness: judge prompts, verdicts, and scoring."""

from .judges import HttpJudge, JudgeClient, ReplayJudge, StubJudge, stub_judge
from .prompts import CRITERIA, Criterion, JudgeRequest, build_prompt, build_request, template_text
from .runner import EvalReport, run_eval
from .scoring import AggregationConfig, SampleScore, aggregate
from .verdicts import JudgeVerdict, VerdictParseError, parse_verdict

__all__ = [
    "CRITERIA",
    "Criterion",
    "JudgeRequest",
    "build_prompt",
    "build_request",
    "template_text",
    "JudgeVerdict",
    "VerdictParseError",
    "parse_verdict",
    "AggregationConfig",
    "SampleScore",
    "aggregate",
    "JudgeClient",
    "StubJudge",
    "stub_judge",
    "ReplayJudge",
    "HttpJudge",
    "EvalReport",
    "run_eval",
]
