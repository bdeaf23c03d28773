"""Batch evaluation: judge every sample under each criterion, aggregate, report.

One output image per sample is expected at ``outputs_dir/{id}.png``.
Missing outputs and unparseable verdicts score zero and are flagged rather
than aborting the run. Scores repeat ``repeats`` times (the repeat index
seeds stochastic judges); per-task statistics are the mean and sample
standard deviation of the per-repeat task means.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .. import manifest as manifest_mod
from ..images import load_png
from .judges import JudgeClient
from .prompts import Criterion, build_request
from .scoring import AggregationConfig, SampleScore, aggregate, zero_score
from .verdicts import parse_verdict

log = logging.getLogger(__name__)


@dataclass
class EvalReport:
    repeats: int
    judge: str
    sample_scores: dict[str, list[SampleScore]] = field(default_factory=dict)
    sample_tasks: dict[str, str] = field(default_factory=dict)
    flagged: dict[str, str] = field(default_factory=dict)

    def task_stats(self) -> dict[str, dict[str, float]]:
        by_task: dict[str, list[list[float]]] = {}
        for sid, scores in self.sample_scores.items():
            by_task.setdefault(self.sample_tasks[sid], []).append([s.final for s in scores])
        out: dict[str, dict[str, float]] = {}
        for task, rows in sorted(by_task.items()):
            run_means = [
                sum(row[r] for row in rows) / len(rows) for r in range(self.repeats)
            ]
            mean = sum(run_means) / len(run_means)
            if len(run_means) > 1:
                var = sum((m - mean) ** 2 for m in run_means) / (len(run_means) - 1)
                std = math.sqrt(var)
            else:
                std = 0.0
            out[task] = {"mean": mean, "std": std, "samples": float(len(rows))}
        return out

    def overall_mean(self) -> float:
        finals = [s.final for scores in self.sample_scores.values() for s in scores]
        return sum(finals) / len(finals) if finals else 0.0

    def to_json(self) -> dict:
        return {
            "judge": self.judge,
            "repeats": self.repeats,
            "overall_mean": self.overall_mean(),
            "tasks": self.task_stats(),
            "flagged": dict(self.flagged),
            "samples": {
                sid: [s.as_dict() for s in scores]
                for sid, scores in sorted(self.sample_scores.items())
            },
        }

    def table(self) -> str:
        stats = self.task_stats()
        width = max([len(t) for t in stats] + [4])
        lines = [f"{'task'.ljust(width)}  {'mean':>7}  {'std':>6}  {'n':>4}"]
        for task, row in stats.items():
            lines.append(
                f"{task.ljust(width)}  {row['mean']:7.2f}  {row['std']:6.2f}  {int(row['samples']):4d}"
            )
        lines.append(f"{'overall'.ljust(width)}  {self.overall_mean():7.2f}")
        if self.flagged:
            lines.append(f"flagged: {', '.join(sorted(self.flagged))}")
        return "\n".join(lines)


def run_eval(
    dataset_root: str | Path,
    outputs_dir: str | Path,
    judge: JudgeClient,
    repeats: int = 3,
    report_path: str | Path | None = None,
    aggregation: AggregationConfig = AggregationConfig(),
) -> EvalReport:
    dataset_root = Path(dataset_root)
    outputs_dir = Path(outputs_dir)
    manifest = manifest_mod.manifest_read(dataset_root)
    report = EvalReport(repeats=repeats, judge=getattr(judge, "identity", "unknown"))

    for entry in manifest:
        report.sample_tasks[entry.id] = entry.task
        out_path = outputs_dir / f"{entry.id}.png"
        if not out_path.is_file():
            report.flagged[entry.id] = "missing output image"
            report.sample_scores[entry.id] = [zero_score() for _ in range(repeats)]
            continue
        output = load_png(out_path)
        scribbled = load_png(dataset_root / entry.assets["input"])
        original = (
            load_png(dataset_root / entry.assets["base"])
            if "base" in entry.assets
            else scribbled
        )
        per_repeat: list[SampleScore] = []
        for r in range(repeats):
            verdicts = {}
            failure = None
            for criterion in Criterion:
                request = build_request(
                    criterion,
                    entry.instruction,
                    original=original,
                    scribbled=scribbled,
                    output=output,
                    sample_id=entry.id,
                )
                try:
                    text = judge.complete(request, seed=r)
                    verdicts[criterion] = parse_verdict(criterion, text)
                except Exception as err:  # judge/transport/parse failures flag the sample
                    failure = f"{criterion.value}: {err}"
                    break
            if failure is None:
                per_repeat.append(aggregate(verdicts, aggregation))
            else:
                report.flagged[entry.id] = failure
                per_repeat.append(zero_score())
        report.sample_scores[entry.id] = per_repeat

    if report_path is not None:
        report_path = Path(report_path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(report.to_json(), indent=2), encoding="utf-8")
    return report
