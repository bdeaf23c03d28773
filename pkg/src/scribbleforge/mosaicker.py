"""Multi-task tuples by tiling single-task samples into a grid.

Inputs tile into one composite, targets tile identically, and the per-part
instructions are shuffled then joined as numbered clauses. Parts must carry
mutually distinct scribble colors; callers resolve conflicts by re-rendering
a part's scribble in a fresh color before mosaicking (see
:func:`recolor_sample`). The training stream interleaves single and mosaic
pools at a fixed ratio using shuffled blocks, so the long-run mix is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence, TypeVar

import numpy as np

from .images import RGB, ImageBuffer
from .instructions import InstructionContext, render_template_instruction
from .rng import Rng
from .samples import EditSample
from .scribble import COLOR_DISTANCE_MIN, chebyshev, render_scribble, sample_color
from .compositor import _nearest_scale

T = TypeVar("T")

GRIDS = {"1x2": (1, 2), "2x1": (2, 1), "2x2": (2, 2)}


class MosaicError(ValueError):
    pass


@dataclass(frozen=True)
class MosaicLayout:
    grid: str  # 1x2 | 2x1 | 2x2
    cell: tuple[int, int]  # (width, height)

    def __post_init__(self) -> None:
        if self.grid not in GRIDS:
            raise MosaicError(f"grid must be one of {sorted(GRIDS)}, got {self.grid!r}")

    @property
    def rows(self) -> int:
        return GRIDS[self.grid][0]

    @property
    def cols(self) -> int:
        return GRIDS[self.grid][1]

    @property
    def k(self) -> int:
        return self.rows * self.cols

    def cell_origin(self, index: int) -> tuple[int, int]:
        r, c = divmod(index, self.cols)
        return (c * self.cell[0], r * self.cell[1])


def choose_layout(k: int, cell: tuple[int, int], rng: Rng) -> MosaicLayout:
    if k == 4:
        return MosaicLayout("2x2", cell)
    if k == 2:
        return MosaicLayout(rng.choice(["1x2", "2x1"]), cell)
    raise MosaicError(f"k must be 2 or 4, got {k}")


@dataclass(frozen=True)
class MultiTaskSample:
    id: str
    input: ImageBuffer
    instruction: str
    target: ImageBuffer
    parts: tuple[tuple[str, int, RGB], ...]  # (source id, cell index, color)
    layout: MosaicLayout
    edit_mask: np.ndarray | None = None
    seed: int = 0

    @property
    def k(self) -> int:
        return len(self.parts)


def _letterbox(image: ImageBuffer, cell: tuple[int, int]) -> ImageBuffer:
    cw, ch = cell
    if (image.width, image.height) == (cw, ch):
        return image
    scale = min(cw / image.width, ch / image.height)
    nw = max(1, int(round(image.width * scale)))
    nh = max(1, int(round(image.height * scale)))
    scaled = _nearest_scale(image.array, nh, nw)
    out = np.zeros((ch, cw, 4), dtype=np.uint8)
    out[..., 3] = 255
    y0 = (ch - nh) // 2
    x0 = (cw - nw) // 2
    out[y0 : y0 + nh, x0 : x0 + nw] = scaled
    return ImageBuffer(out)


def _letterbox_mask(mask: np.ndarray, cell: tuple[int, int]) -> np.ndarray:
    cw, ch = cell
    if mask.shape == (ch, cw):
        return mask
    h, w = mask.shape
    scale = min(cw / w, ch / h)
    nw = max(1, int(round(w * scale)))
    nh = max(1, int(round(h * scale)))
    scaled = _nearest_scale(mask.astype(np.uint8), nh, nw).astype(bool)
    out = np.zeros((ch, cw), dtype=bool)
    y0 = (ch - nh) // 2
    x0 = (cw - nw) // 2
    out[y0 : y0 + nh, x0 : x0 + nw] = scaled
    return out


def mosaic(
    samples: Sequence[EditSample],
    layout: MosaicLayout,
    rng: Rng,
    sample_id: str | None = None,
) -> MultiTaskSample:
    """Tile ``samples`` into ``layout``; instructions join in random order."""
    if len(samples) != layout.k:
        raise MosaicError(f"layout {layout.grid} needs {layout.k} samples, got {len(samples)}")
    colors = [s.scribble.color for s in samples]
    for a, b in itertools.combinations(colors, 2):
        if chebyshev(a, b) < COLOR_DISTANCE_MIN:
            raise MosaicError(
                f"scribble colors {a} and {b} are too close; re-color parts before mosaicking"
            )

    cw, ch = layout.cell
    width, height = cw * layout.cols, ch * layout.rows
    input_arr = np.zeros((height, width, 4), dtype=np.uint8)
    target_arr = np.zeros((height, width, 4), dtype=np.uint8)
    masks = []
    for i, s in enumerate(samples):
        ox, oy = layout.cell_origin(i)
        input_arr[oy : oy + ch, ox : ox + cw] = _letterbox(s.input, layout.cell).array
        target_arr[oy : oy + ch, ox : ox + cw] = _letterbox(s.target, layout.cell).array
        masks.append(None if s.edit_mask is None else _letterbox_mask(s.edit_mask, layout.cell))

    union_mask = None
    if all(m is not None for m in masks):
        union_mask = np.zeros((height, width), dtype=bool)
        for i, m in enumerate(masks):
            ox, oy = layout.cell_origin(i)
            union_mask[oy : oy + ch, ox : ox + cw] = m

    order = rng.shuffled(list(range(len(samples))))
    instruction = " ".join(
        f"{n + 1}. {samples[j].instruction}" for n, j in enumerate(order)
    )

    return MultiTaskSample(
        id=sample_id or f"mt-{'-'.join(s.id for s in samples)}",
        input=ImageBuffer(input_arr),
        instruction=instruction,
        target=ImageBuffer(target_arr),
        parts=tuple((s.id, i, s.scribble.color) for i, s in enumerate(samples)),
        layout=layout,
        edit_mask=union_mask,
    )


def recolor_sample(sample: EditSample, taken: Sequence[RGB], rng: Rng) -> EditSample:
    """Re-render the sample's scribble in a fresh color distinct from ``taken``.

    Needs the pre-scribble base image and the recorded instruction context;
    the instruction is re-rendered so it names the new color.
    """
    from dataclasses import replace as dc_replace

    if sample.base is None:
        raise MosaicError(f"sample {sample.id} has no base image; cannot re-color")
    ctx_raw = sample.extra.get("instruction_ctx")
    if ctx_raw is None:
        raise MosaicError(f"sample {sample.id} has no recorded instruction context")
    from .scribble import color_name

    new_color = sample_color(rng, taken)
    spec = sample.scribble.with_color(new_color)
    new_input = render_scribble(sample.base, spec)
    ctx = InstructionContext.from_json(ctx_raw)
    ctx = InstructionContext(
        task=ctx.task,
        scribble_kind=ctx.scribble_kind,
        color_name=color_name(new_color),
        object_desc=ctx.object_desc,
        extras=ctx.extras,
    )
    instruction = render_template_instruction(ctx, rng.spawn("instruction"))
    extra = dict(sample.extra)
    extra["instruction_ctx"] = ctx.to_json()
    return dc_replace(
        sample, input=new_input, scribble=spec, instruction=instruction, extra=extra
    )


def distinct_color_parts(
    samples: Sequence[EditSample], rng: Rng
) -> list[EditSample]:
    """Re-color parts left to right until all pairwise color distances clear the bound."""
    out: list[EditSample] = []
    taken: list[RGB] = []
    for s in samples:
        if all(chebyshev(s.scribble.color, c) >= COLOR_DISTANCE_MIN for c in taken):
            out.append(s)
        else:
            out.append(recolor_sample(s, taken, rng.spawn(f"recolor/{s.id}")))
        taken.append(out[-1].scribble.color)
    return out


def stream(
    single_pool: Sequence[T],
    mosaic_pool: Sequence[T],
    rng: Rng,
    ratio: tuple[int, int] = (4, 1),
) -> Iterator[T]:
    """Infinite shuffled mix of the two pools at ``ratio`` singles : mosaics.

    Draws are uniform with replacement within each pool; the mix is enforced
    per shuffled block of ``sum(ratio)`` items, so any long window matches
    the ratio exactly up to block boundaries.
    """
    n_single, n_mosaic = ratio
    if n_single < 0 or n_mosaic < 0 or n_single + n_mosaic == 0:
        raise MosaicError(f"bad ratio {ratio}")
    if n_single > 0 and not single_pool:
        raise MosaicError("single pool is empty")
    if n_mosaic > 0 and not mosaic_pool:
        raise MosaicError("mosaic pool is empty")
    while True:
        block: list[T] = []
        for _ in range(n_single):
            block.append(single_pool[rng.integers(0, len(single_pool))])
        for _ in range(n_mosaic):
            block.append(mosaic_pool[rng.integers(0, len(mosaic_pool))])
        yield from rng.shuffled(block)
