"""Candidate store for human review: append-only log, leases, verdicts.

Every mutation appends one JSONL record to ``candidates.log`` and state is
a pure replay of that log, so a crash between mutations loses nothing and
an auditor can reconstruct any historical state. Reviewers acquire
time-limited leases on pending candidates; verdicts and replacement
scribbles require a live lease. Replacement scribbles re-render the input
from the stored pre-scribble base through the same stroke rasterizer the
synthesis pipeline uses, and the regenerated instruction (recorded in the
log) names the new color.
"""

from __future__ import annotations

import json
import threading
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .. import manifest as manifest_mod
from ..images import RGB, load_png, save_png
from ..instructions import InstructionContext, render_template_instruction
from ..rng import Rng
from ..samples import EditSample
from ..scribble import PALETTE, render_strokes

LOG_NAME = "candidates.log"
DEFAULT_LEASE_SECONDS = 600.0

_PALETTE_COLORS = {rgb for _, rgb in PALETTE}
_NAME_BY_COLOR = {rgb: name for name, rgb in PALETTE}


class UnknownCandidateError(KeyError):
    pass


class CandidateConflictError(RuntimeError):
    pass


class StrokeValidationError(ValueError):
    pass


@dataclass
class CandidateState:
    entry: manifest_mod.ManifestEntry
    status: str = "pending"  # pending | accepted | rejected
    strokes: list[dict] = field(default_factory=list)
    instruction: str = ""
    color: tuple[int, int, int] = (0, 0, 0)
    lease: tuple[str, float] | None = None  # (reviewer, absolute expiry)

    def leased_by(self, reviewer: str, now: float) -> bool:
        return self.lease is not None and self.lease[0] == reviewer and self.lease[1] > now

    def lease_active(self, now: float) -> bool:
        return self.lease is not None and self.lease[1] > now

    def snapshot(self) -> dict:
        return {
            "id": self.entry.id,
            "status": self.status,
            "instruction": self.instruction,
            "color": list(self.color),
            "strokes": [dict(s) for s in self.strokes],
            "lease": list(self.lease) if self.lease else None,
        }


class CandidateStore:
    """Append-only reviewed-candidate store rooted at a directory."""

    def __init__(self, root: str | Path, lease_seconds: float = DEFAULT_LEASE_SECONDS) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.lease_seconds = lease_seconds
        self._lock = threading.Lock()
        self._states: dict[str, CandidateState] = {}
        self._log_path = self.root / LOG_NAME
        if self._log_path.is_file():
            self._replay()

    # --- log machinery ---------------------------------------------------

    def _append(self, record: dict) -> None:
        with self._log_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            f.flush()

    def _replay(self) -> None:
        with self._log_path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    self._apply(json.loads(line))

    def _apply(self, record: dict) -> None:
        op = record["op"]
        if op == "add":
            entry = manifest_mod.ManifestEntry.from_json(record["entry"])
            self._states[entry.id] = CandidateState(
                entry=entry, instruction=entry.instruction, color=tuple(entry.color)
            )
            return
        state = self._states[record["id"]]
        if op == "lease":
            state.lease = (record["reviewer"], float(record["expiry"]))
        elif op == "verdict":
            state.status = "accepted" if record["verdict"] == "accept" else "rejected"
            state.lease = None
        elif op == "scribble":
            state.strokes = [dict(s) for s in record["strokes"]]
            state.instruction = record["instruction"]
            state.color = tuple(record["color"])
        else:
            raise ValueError(f"unknown log op {op!r}")

    # --- queries -----------------------------------------------------------

    def __contains__(self, candidate_id: str) -> bool:
        return candidate_id in self._states

    def get(self, candidate_id: str) -> CandidateState:
        if candidate_id not in self._states:
            raise UnknownCandidateError(candidate_id)
        return self._states[candidate_id]

    def list(self, status: str | None = None) -> list[CandidateState]:
        states = list(self._states.values())
        if status is not None:
            states = [s for s in states if s.status == status]
        return states

    def snapshot(self) -> dict:
        """Full state for equality checks; independent of wall-clock."""
        return {cid: s.snapshot() for cid, s in sorted(self._states.items())}

    def asset_path(self, candidate_id: str, role: str) -> Path:
        state = self.get(candidate_id)
        if role not in state.entry.assets:
            raise UnknownCandidateError(f"{candidate_id} has no {role} asset")
        return self.root / state.entry.assets[role]

    # --- mutations -----------------------------------------------------------

    def add(self, sample: EditSample) -> CandidateState:
        with self._lock:
            if sample.id in self._states:
                raise CandidateConflictError(f"candidate {sample.id} already exists")
            entry = manifest_mod.save_sample(sample, self.root)
            record = {"op": "add", "entry": entry.to_json()}
            self._append(record)
            self._apply(record)
            return self._states[sample.id]

    def lease_pending(
        self, reviewer: str, limit: int, now: float | None = None
    ) -> list[CandidateState]:
        now = time.time() if now is None else now
        out = []
        with self._lock:
            for state in self._states.values():
                if len(out) >= limit:
                    break
                if state.status != "pending":
                    continue
                # candidates leased to someone else are untouchable; the
                # requesting reviewer's own leases are re-issued (renewed)
                if state.lease_active(now) and state.lease[0] != reviewer:
                    continue
                record = {
                    "op": "lease",
                    "id": state.entry.id,
                    "reviewer": reviewer,
                    "expiry": now + self.lease_seconds,
                }
                self._append(record)
                self._apply(record)
                out.append(state)
        return out

    def decide(
        self, candidate_id: str, reviewer: str, verdict: str, now: float | None = None
    ) -> CandidateState:
        if verdict not in ("accept", "reject"):
            raise ValueError(f"verdict must be accept or reject, got {verdict!r}")
        now = time.time() if now is None else now
        with self._lock:
            state = self.get(candidate_id)
            if state.status != "pending":
                raise CandidateConflictError(f"{candidate_id} already {state.status}")
            if not state.leased_by(reviewer, now):
                raise CandidateConflictError(f"{candidate_id} is not leased by {reviewer}")
            record = {"op": "verdict", "id": candidate_id, "reviewer": reviewer, "verdict": verdict}
            self._append(record)
            self._apply(record)
            return state

    def add_strokes(
        self,
        candidate_id: str,
        reviewer: str,
        strokes: list[dict],
        now: float | None = None,
    ) -> CandidateState:
        """Replace the candidate's scribble with reviewer-drawn strokes."""
        now = time.time() if now is None else now
        if not strokes:
            raise StrokeValidationError("at least one stroke required")
        for s in strokes:
            points = s.get("points", [])
            if len(points) < 2:
                raise StrokeValidationError("each stroke needs at least 2 points")
            color = tuple(int(c) for c in s.get("color", ()))
            if color not in _PALETTE_COLORS:
                raise StrokeValidationError(f"{color} is not a palette color")
            if int(s.get("thickness", 0)) < 1:
                raise StrokeValidationError("stroke thickness must be >= 1")

        with self._lock:
            state = self.get(candidate_id)
            if state.status != "pending":
                raise CandidateConflictError(f"{candidate_id} already {state.status}")
            if not state.leased_by(reviewer, now):
                raise CandidateConflictError(f"{candidate_id} is not leased by {reviewer}")

            base = load_png(self.root / state.entry.assets["base"])
            rendered = render_strokes(
                base,
                [
                    (
                        [(float(x), float(y)) for x, y in s["points"]],
                        tuple(int(c) for c in s["color"]),
                        int(s["thickness"]),
                    )
                    for s in strokes
                ],
            )
            save_png(rendered, self.root / state.entry.assets["input"])

            new_color = tuple(int(c) for c in strokes[0]["color"])
            instruction = self._regenerate_instruction(state, new_color)
            record = {
                "op": "scribble",
                "id": candidate_id,
                "reviewer": reviewer,
                "strokes": strokes,
                "instruction": instruction,
                "color": list(new_color),
            }
            self._append(record)
            self._apply(record)
            return state

    def _regenerate_instruction(self, state: CandidateState, color: RGB) -> str:
        ctx_raw = state.entry.extra.get("instruction_ctx")
        if ctx_raw is None:
            return state.instruction
        base_ctx = InstructionContext.from_json(ctx_raw)
        ctx = InstructionContext(
            task=base_ctx.task,
            scribble_kind="freehand",
            color_name=_NAME_BY_COLOR[tuple(color)],
            object_desc=base_ctx.object_desc,
            extras=base_ctx.extras,
        )
        seed = zlib.crc32(f"{state.entry.id}:{len(state.strokes)}".encode())
        return render_template_instruction(ctx, Rng(seed, "review-instruction"))

    # --- export -----------------------------------------------------------

    def export_accepted(self) -> list[manifest_mod.ManifestEntry]:
        """Manifest entries for accepted candidates, with current scribbles.

        Each exported sample is reloaded and re-validated so a corrupted
        asset or invariant break fails here rather than at training time.
        """
        out = []
        for state in self.list("accepted"):
            entry = state.entry
            assets = {k: v for k, v in entry.assets.items() if k != "mask"}
            extra = dict(entry.extra)
            if state.strokes:
                extra["reviewer_strokes"] = state.strokes
            exported = manifest_mod.ManifestEntry(
                id=entry.id,
                assets=assets,
                instruction=state.instruction,
                task=entry.task,
                color=tuple(state.color),
                provenance="real-accepted",
                seed=entry.seed,
                extra=extra,
            )
            manifest_mod.load_sample(exported, self.root).validate()
            out.append(exported)
        return out
