"""Stage-2 real-image candidates via external model clients.

Per photo: a VLM proposes an object and coarse instruction, an editor model
produces the edited frame, a referring-segmentation model localizes the
change, a scribble is fitted to the mask's box, and the VLM writes the
final scribble-aware instruction. Every client has a deterministic stub
backed by the repo fixtures (sidecar masks and metadata keyed by image
content), so the whole flow runs closed-loop offline. Candidates land in a
:class:`~scribbleforge.pipeline.review.CandidateStore` as ``pending``.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx
import numpy as np
from PIL import Image

from ..images import ImageBuffer, load_mask_png, load_png
from ..instructions import InstructionContext
from ..rng import Rng
from ..samples import EditSample, EditTask, Provenance
from ..scribble import FitConfig, PALETTE, fit_template, render_scribble, template_library
from .config import Stage2Config
from .review import CandidateStore

log = logging.getLogger(__name__)


class EditorClient(Protocol):
    identity: str

    def edit(self, image: ImageBuffer, instruction: str) -> ImageBuffer: ...


class SegmenterClient(Protocol):
    identity: str

    def segment(self, image: ImageBuffer, phrase: str) -> np.ndarray: ...


class VlmClient(Protocol):
    identity: str

    def propose(self, image: ImageBuffer, task: EditTask) -> tuple[str, str]: ...

    def finalize(self, scribbled: ImageBuffer, target: ImageBuffer) -> str: ...


# --- fixture-backed stubs -----------------------------------------------------


def _content_key(image: ImageBuffer) -> str:
    return hashlib.sha256(image.array.tobytes()).hexdigest()


class _FixtureIndex:
    """Maps image content to its sidecar mask/meta files."""

    def __init__(self, images_dir: str | Path) -> None:
        self.by_key: dict[str, dict] = {}
        images_dir = Path(images_dir)
        for png in sorted(images_dir.glob("*.png")):
            if png.name.endswith(".mask.png"):
                continue
            mask_path = images_dir / f"{png.stem}.mask.png"
            meta_path = images_dir / f"{png.stem}.json"
            if not mask_path.is_file() or not meta_path.is_file():
                continue
            image = load_png(png)
            self.by_key[_content_key(image)] = {
                "name": png.stem,
                "mask": load_mask_png(mask_path),
                "meta": json.loads(meta_path.read_text(encoding="utf-8")),
            }

    def lookup(self, image: ImageBuffer) -> dict:
        key = _content_key(image)
        if key not in self.by_key:
            raise KeyError("image is not a known fixture")
        return self.by_key[key]


class StubVlm:
    def __init__(self, index: _FixtureIndex) -> None:
        self._index = index
        self.identity = "stub-vlm"

    def propose(self, image: ImageBuffer, task: EditTask) -> tuple[str, str]:
        meta = self._index.lookup(image)["meta"]
        obj = meta["object"]
        return obj, f"{task.value.replace('-', ' ')}: {obj}"

    def finalize(self, scribbled: ImageBuffer, target: ImageBuffer) -> str:
        color = _dominant_palette_color(scribbled)
        return f"Apply the requested edit to the object marked by the {color} scribble."


def _dominant_palette_color(image: ImageBuffer) -> str:
    best_name, best_count = "red", 0
    rgb = image.array[..., :3]
    for name, color in PALETTE:
        count = int(np.all(rgb == np.asarray(color, dtype=np.uint8), axis=-1).sum())
        if count > best_count:
            best_name, best_count = name, count
    return best_name


class StubEditor:
    """Inverts the object's pixels inside the fixture mask; a stand-in edit
    whose changed region matches the segmenter's answer exactly."""

    def __init__(self, index: _FixtureIndex) -> None:
        self._index = index
        self.identity = "stub-editor"

    def edit(self, image: ImageBuffer, instruction: str) -> ImageBuffer:
        mask = self._index.lookup(image)["mask"]
        out = image.writable_copy()
        out[mask, :3] = 255 - out[mask, :3]
        return ImageBuffer(out)


class StubSegmenter:
    def __init__(self, index: _FixtureIndex, fail_names: set[str] | None = None) -> None:
        self._index = index
        self.identity = "stub-segmenter"
        self.fail_names = fail_names or set()

    def segment(self, image: ImageBuffer, phrase: str) -> np.ndarray:
        rec = self._index.lookup(image)
        if rec["name"] in self.fail_names:
            return np.zeros_like(rec["mask"])
        return rec["mask"]


def stub_clients(images_dir: str | Path):
    index = _FixtureIndex(images_dir)
    return StubEditor(index), StubSegmenter(index), StubVlm(index)


# --- HTTP clients ---------------------------------------------------------------


def _b64_png(image: ImageBuffer) -> str:
    buf = io.BytesIO()
    Image.fromarray(image.array, mode="RGBA").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _png_b64(data: str) -> ImageBuffer:
    raw = base64.b64decode(data)
    with Image.open(io.BytesIO(raw)) as im:
        return ImageBuffer.from_array(np.asarray(im.convert("RGBA")))


class HttpEditor:
    def __init__(self, url: str, timeout: float = 300.0) -> None:
        self.url, self.identity = url, f"http-editor:{url}"
        self._client = httpx.Client(timeout=timeout)

    def edit(self, image: ImageBuffer, instruction: str) -> ImageBuffer:
        resp = self._client.post(self.url, json={"image": _b64_png(image), "instruction": instruction})
        resp.raise_for_status()
        return _png_b64(resp.json()["image"])


class HttpSegmenter:
    def __init__(self, url: str, timeout: float = 120.0) -> None:
        self.url, self.identity = url, f"http-segmenter:{url}"
        self._client = httpx.Client(timeout=timeout)

    def segment(self, image: ImageBuffer, phrase: str) -> np.ndarray:
        resp = self._client.post(self.url, json={"image": _b64_png(image), "phrase": phrase})
        resp.raise_for_status()
        return _png_b64(resp.json()["mask"]).array[..., 0] > 127


class HttpVlm:
    def __init__(self, url: str, timeout: float = 120.0) -> None:
        self.url, self.identity = url, f"http-vlm:{url}"
        self._client = httpx.Client(timeout=timeout)

    def propose(self, image: ImageBuffer, task: EditTask) -> tuple[str, str]:
        resp = self._client.post(
            self.url, json={"mode": "propose", "image": _b64_png(image), "task": task.value}
        )
        resp.raise_for_status()
        body = resp.json()
        return str(body["object"]), str(body["instruction"])

    def finalize(self, scribbled: ImageBuffer, target: ImageBuffer) -> str:
        resp = self._client.post(
            self.url,
            json={"mode": "finalize", "scribbled": _b64_png(scribbled), "target": _b64_png(target)},
        )
        resp.raise_for_status()
        return str(resp.json()["text"])


# --- the candidate pipeline -----------------------------------------------------


def run_stage2_candidates(
    cfg: Stage2Config,
    editor: EditorClient,
    segmenter: SegmenterClient,
    vlm: VlmClient,
    store: CandidateStore | None = None,
) -> list[EditSample]:
    """Build pending candidates from every annotated photo under ``images_dir``."""
    store = store or CandidateStore(cfg.store_dir)
    images_dir = Path(cfg.images_dir)
    audit_path = Path(cfg.store_dir) / "audit.jsonl"
    audit_path.parent.mkdir(parents=True, exist_ok=True)

    out: list[EditSample] = []
    photos = [
        p for p in sorted(images_dir.glob("*.png")) if not p.name.endswith(".mask.png")
    ]
    for i, png in enumerate(photos):
        name = png.stem
        rng = Rng(cfg.seed, f"stage2/{name}")
        try:
            image = load_png(png)
            meta_path = images_dir / f"{name}.json"
            task = EditTask.REMOVAL
            if meta_path.is_file():
                task = EditTask(json.loads(meta_path.read_text())["task"])
            obj, coarse = vlm.propose(image, task)
            target = editor.edit(image, coarse)
            mask = segmenter.segment(image, obj)
            if not mask.any():
                _audit(audit_path, name, "empty segmentation mask")
                continue

            from ..images import BBox
            from ..scribble import color_name

            anchor = BBox.from_mask(mask)
            lib = template_library()
            template = lib[rng.choice(sorted(lib))]
            spec = fit_template(template, anchor, rng, FitConfig(thickness_range=(2, 5)))
            scribbled = render_scribble(image, spec)
            instruction = vlm.finalize(scribbled, target)

            ctx = InstructionContext(
                task=task,
                scribble_kind=template.kind,
                color_name=color_name(spec.color),
                object_desc=obj,
            )
            sample = EditSample(
                id=f"s2-{name}",
                input=scribbled,
                instruction=instruction,
                target=target,
                scribble=spec,
                task=task,
                provenance=Provenance.REAL_CANDIDATE,
                edit_mask=mask,
                base=image,
                changed_region=anchor,
                seed=cfg.seed,
                extra={"instruction_ctx": ctx.to_json(), "source": name},
            )
            store.add(sample)
            out.append(sample)
        except Exception as err:  # client failures skip the candidate, with audit
            _audit(audit_path, name, f"{type(err).__name__}: {err}")
            log.warning("stage2 candidate %s skipped: %s", name, err)
    return out


def _audit(path: Path, name: str, reason: str) -> None:
    with path.open("a", encoding="utf-8") as f:
        f.write(json.dumps({"image": name, "skipped": reason}) + "\n")
