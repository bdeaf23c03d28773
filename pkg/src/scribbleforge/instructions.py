"""Editing-instruction text: offline templates plus an optional LLM client.

Template mode is the default so dataset generation never depends on an
external service; every phrasing names the scribble's color and shape so
the instruction stays grounded in the marked region. The LLM path speaks a
single HTTP JSON endpoint ``{prompt, seed} -> {text}`` and is validated
and retried once before a sample is skipped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from .rng import Rng
from .samples import EditTask

MAX_INSTRUCTION_CHARS = 400

RELAYOUT_CUE = "re-layout the surrounding text so the line flows naturally"

# How each scribble shape is referred to in prose.
MARKER_NOUNS = {
    "rectangle": "box",
    "ellipse": "circle",
    "freehand": "scribble",
}


class InstructionError(ValueError):
    pass


class InstructionClientError(RuntimeError):
    def __init__(self, identity: str, message: str) -> None:
        super().__init__(f"[{identity}] {message}")
        self.identity = identity


@dataclass(frozen=True)
class InstructionContext:
    task: EditTask
    scribble_kind: str
    color_name: str
    object_desc: str
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.object_desc.strip():
            raise InstructionError("object description must be non-empty")

    @property
    def marker(self) -> str:
        return MARKER_NOUNS.get(self.scribble_kind, "mark")

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "scribble_kind": self.scribble_kind,
            "color_name": self.color_name,
            "object_desc": self.object_desc,
            "extras": dict(self.extras),
        }

    @staticmethod
    def from_json(raw: dict) -> "InstructionContext":
        return InstructionContext(
            task=EditTask(raw["task"]),
            scribble_kind=raw["scribble_kind"],
            color_name=raw["color_name"],
            object_desc=raw["object_desc"],
            extras=dict(raw.get("extras", {})),
        )


_PHRASINGS: dict[EditTask, list[str]] = {
    EditTask.ADDITION: [
        "Add {obj} inside the {color} {marker}.",
        "Place {obj} where the {color} {marker} is drawn.",
        "Put {obj} into the area outlined by the {color} {marker}.",
        "Draw {obj} in the region marked with the {color} {marker}.",
        "Insert {obj} at the spot highlighted by the {color} {marker}.",
    ],
    EditTask.REMOVAL: [
        "Remove the {obj} circled in {color}.",
        "Erase the {obj} inside the {color} {marker}.",
        "Delete the {obj} marked by the {color} {marker}.",
        "Take out the {obj} highlighted with the {color} {marker}.",
        "Get rid of the {obj} indicated by the {color} {marker}.",
    ],
    EditTask.REPLACEMENT: [
        "Replace the {obj} inside the {color} {marker} with {replacement}.",
        "Swap the {obj} marked by the {color} {marker} for {replacement}.",
        "Turn the {obj} circled in {color} into {replacement}.",
        "Substitute {replacement} for the {obj} in the {color} {marker}.",
        "Change the {obj} highlighted by the {color} {marker} into {replacement}.",
    ],
    EditTask.TRANSLATION: [
        "Move the {obj} inside the {color} {marker} {direction}.",
        "Shift the {obj} marked with the {color} {marker} {direction}.",
        "Slide the {obj} circled in {color} {direction}.",
        "Relocate the {obj} highlighted by the {color} {marker} {direction}.",
        "Push the {obj} indicated by the {color} {marker} {direction}.",
    ],
    EditTask.TEXT_INSERTION: [
        'Insert "{text}" at the point marked by the {color} {marker}.',
        'Type "{text}" into the spot highlighted with the {color} {marker}.',
        'Add the text "{text}" where the {color} {marker} is drawn.',
        'Write "{text}" at the position circled in {color}.',
        'Put "{text}" into the text at the {color} {marker}.',
    ],
    EditTask.TEXT_DELETION: [
        "Delete the text inside the {color} {marker}.",
        "Remove the words highlighted by the {color} {marker}.",
        "Erase the text marked with the {color} {marker}.",
        "Take out the characters circled in {color}.",
        "Cut the text indicated by the {color} {marker}.",
    ],
    EditTask.TEXT_REPLACEMENT: [
        'Replace the text inside the {color} {marker} with "{text}".',
        'Change the words marked by the {color} {marker} to "{text}".',
        'Rewrite the text highlighted with the {color} {marker} as "{text}".',
        'Swap the characters circled in {color} for "{text}".',
        'Substitute "{text}" for the text in the {color} {marker}.',
    ],
    EditTask.TEXT_STYLE: [
        "Restyle the text inside the {color} {marker}: {style_change}.",
        "For the text marked by the {color} {marker}, {style_change}.",
        "Apply this change to the text highlighted with the {color} {marker}: {style_change}.",
        "Take the text circled in {color} and {style_change}.",
        "Edit the style of the text in the {color} {marker}: {style_change}.",
    ],
}


def render_template_instruction(ctx: InstructionContext, rng: Rng) -> str:
    """Deterministic instruction from the built-in phrasing bank."""
    phrasings = _PHRASINGS[ctx.task]
    template = rng.choice(phrasings)
    fields = {
        "obj": ctx.object_desc,
        "color": ctx.color_name,
        "marker": ctx.marker,
        "text": ctx.extras.get("text", ""),
        "replacement": ctx.extras.get("replacement", "something else"),
        "direction": ctx.extras.get("direction", "to the side"),
        "style_change": ctx.extras.get("style_change", "change its style"),
    }
    out = template.format(**fields)
    if ctx.extras.get("relayout"):
        out = f"{out[:-1]}, and {RELAYOUT_CUE}." if out.endswith(".") else f"{out} {RELAYOUT_CUE}."
    return out


class TextGenClient(Protocol):
    identity: str

    def generate(self, prompt: str, seed: int | None = None) -> str: ...


@dataclass
class StubTextGen:
    """Offline client for tests; replays a scripted transcript or echoes."""

    responses: list[str] = field(default_factory=list)
    identity: str = "stub-textgen"
    calls: int = 0

    def generate(self, prompt: str, seed: int | None = None) -> str:
        self.calls += 1
        if self.responses:
            return self.responses[min(self.calls - 1, len(self.responses) - 1)]
        return prompt


class HttpTextGen:
    """POSTs ``{prompt, seed}`` to one JSON endpoint and reads ``{text}``."""

    def __init__(self, url: str, timeout: float = 30.0) -> None:
        self.url = url
        self.identity = f"http-textgen:{url}"
        self._client = httpx.Client(timeout=timeout)

    def generate(self, prompt: str, seed: int | None = None) -> str:
        resp = self._client.post(self.url, json={"prompt": prompt, "seed": seed})
        resp.raise_for_status()
        return str(resp.json()["text"])


def build_instruction_prompt(ctx: InstructionContext) -> str:
    """Prompt for the instruction-writing model.

    Reconstructed wording; see README for what the generator is given.
    """
    lines = [
        "Write one short imperative image-editing instruction.",
        f"Edit type: {ctx.task.value}.",
        f"The target is marked on the image with a {ctx.color_name} {ctx.marker} "
        f"({ctx.scribble_kind} scribble).",
        f"Target object: {ctx.object_desc}.",
    ]
    for key, value in sorted(ctx.extras.items()):
        lines.append(f"{key}: {value}")
    lines.append(
        "Mention the scribble color. Reply with the instruction sentence only."
    )
    return "\n".join(lines)


def generate_llm_instruction(ctx: InstructionContext, client: TextGenClient, seed: int = 0) -> str:
    """Ask the client for an instruction; validate, retry once, then fail."""
    prompt = build_instruction_prompt(ctx)
    last_error = "no attempt made"
    for attempt in range(2):
        try:
            raw = client.generate(prompt, seed=seed + attempt)
        except Exception as err:  # client transport failures count as attempts
            last_error = f"client call failed: {err}"
            continue
        text = raw.strip().strip('"“”').strip()
        if not text:
            last_error = "client returned empty text"
            continue
        if len(text) > MAX_INSTRUCTION_CHARS:
            last_error = f"client returned {len(text)} chars (limit {MAX_INSTRUCTION_CHARS})"
            continue
        return text
    raise InstructionClientError(client.identity, last_error)
