"""RGBA image buffers, pixel-space boxes, and PNG round-tripping.

Coordinate convention used across the repo: integer coordinates address
pixel centers, so a stroke through ``y=5`` covers the pixel row ``y=5``.
Boxes are half-open in neither axis; ``BBox(x, y, w, h)`` spans pixels
``x .. x+w-1`` and ``y .. y+h-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

RGBA = tuple[int, int, int, int]
RGB = tuple[int, int, int]


class ImageError(ValueError):
    pass


@dataclass(frozen=True)
class ImageBuffer:
    """Immutable RGBA image backed by a read-only ``(h, w, 4)`` uint8 array."""

    array: np.ndarray

    def __post_init__(self) -> None:
        a = self.array
        if a.ndim != 3 or a.shape[2] != 4 or a.dtype != np.uint8:
            raise ImageError(f"expected (h, w, 4) uint8 array, got {a.shape} {a.dtype}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ImageError("image must be at least 1x1")
        a.flags.writeable = False

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @staticmethod
    def from_array(array: np.ndarray) -> "ImageBuffer":
        a = np.ascontiguousarray(array, dtype=np.uint8).copy()
        return ImageBuffer(a)

    @staticmethod
    def filled(width: int, height: int, color: RGBA) -> "ImageBuffer":
        a = np.empty((height, width, 4), dtype=np.uint8)
        a[:, :] = np.asarray(color, dtype=np.uint8)
        return ImageBuffer(a)

    def writable_copy(self) -> np.ndarray:
        return self.array.copy()

    def same_size(self, other: "ImageBuffer") -> bool:
        return self.array.shape[:2] == other.array.shape[:2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return bool(np.array_equal(self.array, other.array))

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.array.tobytes()))


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box with ``w, h >= 1``."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ImageError(f"degenerate box {self}")

    @property
    def x2(self) -> int:
        """One past the rightmost covered pixel column."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + (self.w - 1) / 2.0, self.y + (self.h - 1) / 2.0)

    def union(self, other: "BBox") -> "BBox":
        x = min(self.x, other.x)
        y = min(self.y, other.y)
        return BBox(x, y, max(self.x2, other.x2) - x, max(self.y2, other.y2) - y)

    def overlaps(self, other: "BBox") -> bool:
        return (
            self.x < other.x2
            and other.x < self.x2
            and self.y < other.y2
            and other.y < self.y2
        )

    def dilated(self, margin: int) -> "BBox":
        return BBox(self.x - margin, self.y - margin, self.w + 2 * margin, self.h + 2 * margin)

    def clipped(self, width: int, height: int) -> "BBox | None":
        x = max(self.x, 0)
        y = max(self.y, 0)
        x2 = min(self.x2, width)
        y2 = min(self.y2, height)
        if x >= x2 or y >= y2:
            return None
        return BBox(x, y, x2 - x, y2 - y)

    def to_mask(self, width: int, height: int) -> np.ndarray:
        m = np.zeros((height, width), dtype=bool)
        c = self.clipped(width, height)
        if c is not None:
            m[c.y : c.y2, c.x : c.x2] = True
        return m

    @staticmethod
    def from_mask(mask: np.ndarray) -> "BBox | None":
        ys, xs = np.nonzero(mask)
        if ys.size == 0:
            return None
        x, y = int(xs.min()), int(ys.min())
        return BBox(x, y, int(xs.max()) - x + 1, int(ys.max()) - y + 1)


def load_png(path: str | Path) -> ImageBuffer:
    with Image.open(path) as im:
        rgba = im.convert("RGBA")
        return ImageBuffer.from_array(np.asarray(rgba))


def save_png(image: ImageBuffer, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # low compression: datasets write thousands of small PNGs and encoding
    # dominates generation time at the default level
    Image.fromarray(image.array, mode="RGBA").save(path, format="PNG", compress_level=1)


def save_mask_png(mask: np.ndarray, path: str | Path) -> None:
    """Persist a boolean mask as an 8-bit grayscale PNG (255 = set)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray((mask.astype(np.uint8) * 255), mode="L").save(path, format="PNG")


def load_mask_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 127
