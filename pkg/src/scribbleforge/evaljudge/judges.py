"""Judge client backends: deterministic stub, transcript replay, and HTTP.

The stub closes the evaluation loop offline: it compares the judged output
against the sample's exact target inside and outside the recorded edit
region and emits rubric-format responses. Pixels where the scribbled input
and target legitimately differ (the edit itself plus the scribble stroke)
are not preservation violations; leftover stroke pixels do count against
artifact-freeness.
"""

from __future__ import annotations

import base64
import io
import json
from pathlib import Path
from typing import Protocol

import httpx
import numpy as np
from PIL import Image

from .. import manifest as manifest_mod
from ..images import ImageBuffer
from .prompts import CRITERIA, Criterion, JudgeRequest


class JudgeClient(Protocol):
    identity: str

    def complete(self, request: JudgeRequest, seed: int = 0) -> str: ...


def _differs(a: ImageBuffer, b: ImageBuffer) -> np.ndarray:
    return np.any(a.array != b.array, axis=-1)


def _fmt_block(entries: dict[str, tuple[int, str]]) -> str:
    body = {key: {"reason": reason, "score": score} for key, (score, reason) in entries.items()}
    return json.dumps(body, indent=2)


def stub_judge(request: JudgeRequest, sample) -> str:
    """Rule-based verdict text for ``request`` given its ground-truth sample.

    Rule table (all comparisons pixel-exact):
      edited_in    any edit-region pixel where output != scribbled input
      correct_in   every edit-region pixel matches the target
      clean_out    no difference vs target outside (edit region + stroke)
      strict_out   no difference vs target outside the edit region alone
    """
    if sample.edit_mask is None:
        raise ValueError(f"sample {sample.id} carries no edit mask")
    output = request.images[-1]
    scribbled = sample.input
    target = sample.target
    mask = sample.edit_mask

    edited_in = bool((_differs(output, scribbled) & mask).any())
    correct_in = not bool((_differs(output, target) & mask).any())
    # outside the mask, input and target differ exactly on the stroke pixels
    allowed = mask | _differs(scribbled, target)
    clean_out = not bool((_differs(output, target) & ~allowed).any())
    strict_out = not bool((_differs(output, target) & ~mask).any())

    if request.criterion is Criterion.IA:
        entries = {
            "Visual_Instruction_Localization_Correctness": (
                int(edited_in),
                "edit region was modified" if edited_in else "edit region untouched",
            ),
            "Visual_Operator_Type_Compliance": (
                int(edited_in and correct_in),
                "region matches the target" if correct_in else "region differs from target",
            ),
            "Textual_Action_Semantic_Compliance": (
                int(edited_in and correct_in),
                "requested change applied" if edited_in and correct_in else "requested change absent",
            ),
            "Text_Re-layout_Compliance": (
                int(correct_in),
                "layout matches the target" if correct_in else "layout differs from target",
            ),
        }
        prose = "Compared the output region against the exact target."
    elif request.criterion is Criterion.CP:
        entries = {
            "Text_Contextual_Preservation": (
                int(clean_out),
                "no out-of-target changes" if clean_out else "out-of-target pixels changed",
            )
        }
        prose = (
            "## Differences\npixel comparison against the reference\n"
            "## Target\nthe recorded edit region\n"
            "## Classification\nautomatic\n## Decision\nsee JSON"
        )
    elif request.criterion is Criterion.VC:
        entries = {
            "Text_Style_Consistency": (
                int(correct_in),
                "styles match the target" if correct_in else "styles deviate",
            ),
            "Text_Layout_Seamlessness": (
                int(correct_in),
                "layout is seamless" if correct_in else "layout discontinuity",
            ),
            "Artifact-Free_Text_Generation": (
                int(strict_out),
                "no residual marks" if strict_out else "residual marks or stray pixels",
            ),
        }
        prose = "Checked stroke residue and stray pixels against the target."
    else:  # pragma: no cover
        raise ValueError(request.criterion)
    return f"{prose}\n\n{_fmt_block(entries)}"


class StubJudge:
    """Deterministic closed-loop judge over a dataset manifest."""

    def __init__(self, dataset_root: str | Path) -> None:
        self.root = Path(dataset_root)
        self.identity = f"stub:{self.root}"
        self._manifest = manifest_mod.manifest_read(self.root)
        self._cache: dict[str, object] = {}

    def _sample(self, sample_id: str):
        if sample_id not in self._cache:
            entry = self._manifest.by_id(sample_id)
            self._cache[sample_id] = manifest_mod.load_sample(entry, self.root)
        return self._cache[sample_id]

    def complete(self, request: JudgeRequest, seed: int = 0) -> str:
        if request.sample_id is None:
            raise ValueError("stub judge needs request.sample_id")
        return stub_judge(request, self._sample(request.sample_id))


class ReplayJudge:
    """Replays recorded responses from a JSONL transcript.

    Lines hold ``{"sample_id", "criterion", "text"}`` with an optional
    ``"seed"``; lookups fall back to the seedless record.
    """

    def __init__(self, transcript: str | Path) -> None:
        self.path = Path(transcript)
        self.identity = f"replay:{self.path}"
        self._records: dict[tuple[str, str, int | None], str] = {}
        with self.path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                key = (rec["sample_id"], rec["criterion"], rec.get("seed"))
                self._records[key] = rec["text"]

    def complete(self, request: JudgeRequest, seed: int = 0) -> str:
        for key in (
            (request.sample_id, request.criterion.value, seed),
            (request.sample_id, request.criterion.value, None),
        ):
            if key in self._records:
                return self._records[key]
        raise KeyError(f"no transcript entry for {request.sample_id}/{request.criterion.value}")


def _b64_png(image: ImageBuffer) -> str:
    buf = io.BytesIO()
    Image.fromarray(image.array, mode="RGBA").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class HttpJudge:
    """POSTs ``{images: [b64 PNG...], prompt, seed}`` and reads ``{text}``."""

    def __init__(self, url: str, timeout: float = 120.0) -> None:
        self.url = url
        self.identity = f"http:{url}"
        self._client = httpx.Client(timeout=timeout)

    def complete(self, request: JudgeRequest, seed: int = 0) -> str:
        payload = {
            "images": [_b64_png(im) for im in request.images],
            "prompt": request.prompt,
            "seed": seed,
        }
        resp = self._client.post(self.url, json=payload)
        resp.raise_for_status()
        return str(resp.json()["text"])
