"""Parsing judge responses into structured verdicts.

Judges are told to end their response with a JSON block; we take the last
parseable JSON object in the text, require exactly the criterion's key set,
and coerce each score to {0, 1}. Anything else is a structured parse error
that keeps the raw text for auditing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .prompts import CRITERIA, Criterion


class VerdictParseError(ValueError):
    def __init__(self, message: str, raw: str) -> None:
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class JudgeVerdict:
    criterion: Criterion
    scores: tuple[tuple[str, int], ...]  # (key, 0/1) in rubric order
    reasons: tuple[tuple[str, str], ...]
    raw: str

    def score(self, key: str) -> int:
        for k, v in self.scores:
            if k == key:
                return v
        raise KeyError(key)

    @property
    def mean(self) -> float:
        values = [v for _, v in self.scores]
        return sum(values) / len(values)


def _last_json_object(text: str) -> dict | None:
    decoder = json.JSONDecoder()
    best = None
    idx = 0
    while True:
        start = text.find("{", idx)
        if start < 0:
            break
        try:
            obj, end = decoder.raw_decode(text[start:])
        except json.JSONDecodeError:
            idx = start + 1
            continue
        if isinstance(obj, dict):
            best = obj
        idx = start + max(1, end)
    return best


def _coerce_binary(value) -> int:
    if value in (0, 1):
        return int(value)
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, str) and value.strip() in ("0", "1"):
        return int(value.strip())
    raise ValueError(f"score {value!r} is not binary")


def parse_verdict(criterion: Criterion, response: str) -> JudgeVerdict:
    """Extract and validate the trailing JSON verdict from ``response``."""
    obj = _last_json_object(response)
    if obj is None:
        raise VerdictParseError("no JSON object found in response", response)
    expected = CRITERIA[criterion].keys
    got = set(obj)
    if got != set(expected):
        missing = sorted(set(expected) - got)
        unknown = sorted(got - set(expected))
        detail = []
        if missing:
            detail.append(f"missing {missing}")
        if unknown:
            detail.append(f"unknown {unknown}")
        raise VerdictParseError(f"verdict keys wrong: {'; '.join(detail)}", response)

    scores = []
    reasons = []
    for key in expected:
        entry = obj[key]
        if isinstance(entry, dict):
            raw_score = entry.get("score")
            reason = str(entry.get("reason", ""))
        else:
            raw_score = entry
            reason = ""
        try:
            score = _coerce_binary(raw_score)
        except ValueError as err:
            raise VerdictParseError(f"{key}: {err}", response) from None
        scores.append((key, score))
        reasons.append((key, reason))
    return JudgeVerdict(
        criterion=criterion, scores=tuple(scores), reasons=tuple(reasons), raw=response
    )
