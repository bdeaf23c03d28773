"""Bundled pre-rasterized glyph atlas.

``atlas.json`` holds em metrics and a per-codepoint record
``{off, w, h, left, top, adv}``; ``atlas.bin`` is the concatenation of the
``w*h`` 8-bit coverage bitmaps at those offsets. ``top`` is the bearing from
the baseline up to the bitmap's first row. Shipping rasterized coverage
(rather than going through a font stack at runtime) is what makes renders
byte-identical across platforms. See ``scripts/build_glyph_atlas.py`` for
how the files are produced; CJK coverage uses synthesized stand-in glyphs
with real codepoint identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np


class MissingGlyphError(KeyError):
    def __init__(self, codepoint: int) -> None:
        super().__init__(f"no glyph for U+{codepoint:04X} ({chr(codepoint)!r}) in the atlas")
        self.codepoint = codepoint


@dataclass(frozen=True)
class Glyph:
    codepoint: int
    bitmap: np.ndarray  # (h, w) uint8 coverage; may be empty for whitespace
    left: int  # horizontal bearing from the pen position
    top: int  # vertical bearing from the baseline up to the bitmap top
    advance: int


class GlyphAtlas:
    def __init__(self, meta: dict, blob: bytes) -> None:
        self.em: int = int(meta["em"])
        self.ascent: int = int(meta["ascent"])
        self.descent: int = int(meta["descent"])
        self._records: dict[int, dict] = {int(cp): rec for cp, rec in meta["glyphs"].items()}
        self._blob = blob
        self._glyphs: dict[int, Glyph] = {}

    @staticmethod
    def load(directory: str | Path) -> "GlyphAtlas":
        directory = Path(directory)
        meta = json.loads((directory / "atlas.json").read_text(encoding="utf-8"))
        blob = (directory / "atlas.bin").read_bytes()
        return GlyphAtlas(meta, blob)

    def covers(self, codepoint: int) -> bool:
        return codepoint in self._records

    @property
    def codepoints(self) -> list[int]:
        return sorted(self._records)

    @property
    def cjk_codepoints(self) -> list[int]:
        return [cp for cp in self.codepoints if 0x4E00 <= cp <= 0x9FFF]

    def get(self, codepoint: int) -> Glyph:
        if codepoint in self._glyphs:
            return self._glyphs[codepoint]
        rec = self._records.get(codepoint)
        if rec is None:
            raise MissingGlyphError(codepoint)
        w, h = rec["w"], rec["h"]
        raw = np.frombuffer(self._blob, dtype=np.uint8, count=w * h, offset=rec["off"])
        bitmap = raw.reshape(h, w) if w * h else np.zeros((0, 0), dtype=np.uint8)
        glyph = Glyph(
            codepoint=codepoint,
            bitmap=bitmap,
            left=rec["left"],
            top=rec["top"],
            advance=rec["adv"],
        )
        self._glyphs[codepoint] = glyph
        return glyph


@lru_cache(maxsize=1)
def default_atlas() -> GlyphAtlas:
    root = resources.files("scribbleforge.textforge").joinpath("data")
    with resources.as_file(root) as path:
        return GlyphAtlas.load(path)
