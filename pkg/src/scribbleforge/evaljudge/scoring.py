"""Per-sample score aggregation.

Each criterion scores 100 times the mean of its binary sub-scores. Visual
coherence is gated by instruction adherence (a render that ignored the
instruction gets no credit for looking clean), and the final score is the
geometric mean of the three factors, zero if any factor is zero. Both the
gate threshold and the gating itself live here so alternative rules are a
one-line change.
"""

from __future__ import annotations

from dataclasses import dataclass

from .prompts import Criterion
from .verdicts import JudgeVerdict


@dataclass(frozen=True)
class AggregationConfig:
    gate_threshold: float = 0.0  # VC counts only when IA exceeds this


@dataclass(frozen=True)
class SampleScore:
    ia: float
    cp: float
    vc: float
    vc_gated: float
    final: float

    def as_dict(self) -> dict:
        return {
            "IA": self.ia,
            "CP": self.cp,
            "VC": self.vc,
            "VC_gated": self.vc_gated,
            "final": self.final,
        }


class AggregationError(ValueError):
    pass


def aggregate(
    verdicts: dict[Criterion, JudgeVerdict], cfg: AggregationConfig = AggregationConfig()
) -> SampleScore:
    for criterion in Criterion:
        if criterion not in verdicts:
            raise AggregationError(f"missing verdict for {criterion.value}")
    ia = 100.0 * verdicts[Criterion.IA].mean
    cp = 100.0 * verdicts[Criterion.CP].mean
    vc = 100.0 * verdicts[Criterion.VC].mean
    vc_gated = vc if ia > cfg.gate_threshold else 0.0
    if ia == 0.0 or cp == 0.0 or vc_gated == 0.0:
        final = 0.0
    elif ia == cp == vc_gated:
        final = ia  # geometric mean of equal factors, without cube-root noise
    else:
        final = (ia * cp * vc_gated) ** (1.0 / 3.0)
    return SampleScore(ia=ia, cp=cp, vc=vc, vc_gated=vc_gated, final=final)


def zero_score() -> SampleScore:
    return SampleScore(ia=0.0, cp=0.0, vc=0.0, vc_gated=0.0, final=0.0)
