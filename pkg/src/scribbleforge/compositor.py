"""Layered RGBA compositing and exact-supervision layer edits.

Rendering is non-premultiplied source-over in 8-bit with round-half-up
quantization after each layer blend. Every edit returns the pixel box it
could have touched, so callers get locality guarantees for free: outside
that box, the composites before and after the edit are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import images
from .images import RGBA, BBox, ImageBuffer
from .samples import EditTask

DEFAULT_ALPHA_THRESHOLD = 8


class CompositorError(ValueError):
    pass


@dataclass(frozen=True)
class Layer:
    image: ImageBuffer
    offset: tuple[int, int]  # canvas-space (x, y) of the layer's top-left
    name: str


@dataclass(frozen=True)
class LayerStack:
    width: int
    height: int
    background: RGBA
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise CompositorError("canvas must be at least 1x1")

    def layer(self, index: int) -> Layer:
        if not 0 <= index < len(self.layers):
            raise CompositorError(f"layer index {index} out of range (0..{len(self.layers) - 1})")
        return self.layers[index]


@dataclass(frozen=True)
class LayerEditParams:
    layer_index: int
    asset: ImageBuffer | None = None  # Addition / Replacement payload
    offset: tuple[int, int] | None = None  # Addition placement
    insert_above: int | None = None  # Addition stacking position (defaults to top)
    translation: tuple[int, int] | None = None
    name: str | None = None


def _blend_region(dst: np.ndarray, layer: Layer, width: int, height: int) -> None:
    """Source-over ``layer`` into ``dst`` in place; off-canvas regions clipped."""
    ox, oy = layer.offset
    src = layer.image.array
    x0, y0 = max(ox, 0), max(oy, 0)
    x1 = min(ox + layer.image.width, width)
    y1 = min(oy + layer.image.height, height)
    if x0 >= x1 or y0 >= y1:
        return
    s = src[y0 - oy : y1 - oy, x0 - ox : x1 - ox].astype(np.float64)
    d = dst[y0:y1, x0:x1].astype(np.float64)
    sa = s[..., 3:4] / 255.0
    da = d[..., 3:4] / 255.0
    out_a = sa + da * (1.0 - sa)
    num = s[..., :3] * sa + d[..., :3] * da * (1.0 - sa)
    rgb = np.divide(num, out_a, out=np.zeros_like(num), where=out_a > 0)
    blended = np.concatenate([rgb, out_a * 255.0], axis=-1)
    dst[y0:y1, x0:x1] = np.floor(blended + 0.5).astype(np.uint8)


def composite(stack: LayerStack) -> ImageBuffer:
    """Render the stack bottom-to-top onto its background."""
    dst = np.empty((stack.height, stack.width, 4), dtype=np.uint8)
    dst[:, :] = np.asarray(stack.background, dtype=np.uint8)
    for layer in stack.layers:
        _blend_region(dst, layer, stack.width, stack.height)
    return ImageBuffer(dst)


def layer_support_mask(stack: LayerStack, index: int, threshold: int = 0) -> np.ndarray:
    """Canvas-space boolean mask of the layer's pixels with alpha > threshold."""
    layer = stack.layer(index)
    mask = np.zeros((stack.height, stack.width), dtype=bool)
    ox, oy = layer.offset
    x0, y0 = max(ox, 0), max(oy, 0)
    x1 = min(ox + layer.image.width, stack.width)
    y1 = min(oy + layer.image.height, stack.height)
    if x0 >= x1 or y0 >= y1:
        return mask
    alpha = layer.image.array[y0 - oy : y1 - oy, x0 - ox : x1 - ox, 3]
    mask[y0:y1, x0:x1] = alpha > threshold
    return mask


def layer_bbox(stack: LayerStack, index: int, threshold: int = DEFAULT_ALPHA_THRESHOLD) -> BBox:
    """Tight canvas-space box over the layer's alpha support."""
    box = BBox.from_mask(layer_support_mask(stack, index, threshold))
    if box is None:
        raise CompositorError(f"layer {index} has no alpha support above {threshold}")
    return box


def _nearest_scale(array: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = array.shape[:2]
    ys = np.floor((np.arange(out_h) + 0.5) * in_h / out_h).astype(int)
    xs = np.floor((np.arange(out_w) + 0.5) * in_w / out_w).astype(int)
    return array[ys.clip(0, in_h - 1)[:, None], xs.clip(0, in_w - 1)[None, :]]


def _support_union_bbox(stack: LayerStack, masks: list[np.ndarray]) -> BBox:
    combined = np.zeros((stack.height, stack.width), dtype=bool)
    for m in masks:
        combined |= m
    box = BBox.from_mask(combined)
    # An edit with no visible support changes nothing; report a 1px token box.
    return box if box is not None else BBox(0, 0, 1, 1)


def apply_layer_edit(
    stack: LayerStack, task: EditTask, params: LayerEditParams
) -> tuple[LayerStack, BBox]:
    """Apply one object-level edit; returns the new stack and its changed region."""
    if task == EditTask.ADDITION:
        if params.asset is None or params.offset is None:
            raise CompositorError("addition needs an asset and a placement offset")
        if not (params.asset.array[..., 3] > 0).any():
            raise CompositorError("addition asset has empty alpha")
        at = len(stack.layers) if params.insert_above is None else params.insert_above + 1
        if not 0 <= at <= len(stack.layers):
            raise CompositorError(f"insertion position {at} out of range")
        layer = Layer(params.asset, params.offset, params.name or "added")
        layers = stack.layers[:at] + (layer,) + stack.layers[at:]
        edited = replace(stack, layers=layers)
        changed = _support_union_bbox(edited, [layer_support_mask(edited, at)])
        return edited, changed

    index = params.layer_index
    before_mask = layer_support_mask(stack, index)

    if task == EditTask.REMOVAL:
        layers = stack.layers[:index] + stack.layers[index + 1 :]
        edited = replace(stack, layers=layers)
        return edited, _support_union_bbox(stack, [before_mask])

    if task == EditTask.REPLACEMENT:
        if params.asset is None:
            raise CompositorError("replacement needs an asset")
        if not (params.asset.array[..., 3] > 0).any():
            raise CompositorError("replacement asset has empty alpha")
        box = BBox.from_mask(before_mask)
        if box is None:
            raise CompositorError(f"layer {index} has no visible support to replace")
        scaled = ImageBuffer.from_array(_nearest_scale(params.asset.array, box.h, box.w))
        old = stack.layer(index)
        layer = Layer(scaled, (box.x, box.y), params.name or old.name)
        layers = stack.layers[:index] + (layer,) + stack.layers[index + 1 :]
        edited = replace(stack, layers=layers)
        after_mask = layer_support_mask(edited, index)
        return edited, _support_union_bbox(edited, [before_mask, after_mask])

    if task == EditTask.TRANSLATION:
        if params.translation is None:
            raise CompositorError("translation needs a (dx, dy) offset")
        dx, dy = params.translation
        old = stack.layer(index)
        moved = Layer(old.image, (old.offset[0] + dx, old.offset[1] + dy), old.name)
        layers = stack.layers[:index] + (moved,) + stack.layers[index + 1 :]
        edited = replace(stack, layers=layers)
        after_mask = layer_support_mask(edited, index)
        total = int((old.image.array[..., 3] > 0).sum())
        if total and after_mask.sum() < 0.25 * total:
            raise CompositorError(
                f"translation by ({dx}, {dy}) leaves under 25% of layer {index} on canvas"
            )
        return edited, _support_union_bbox(edited, [before_mask, after_mask])

    raise CompositorError(f"{task.value} is not a layer-level edit")


# --- alpha contour ----------------------------------------------------------

_LEFT = {(1, 0): (0, -1), (0, -1): (-1, 0), (-1, 0): (0, 1), (0, 1): (1, 0)}
_RIGHT = {v: k for k, v in _LEFT.items()}


def _largest_component(mask: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    seen = np.zeros_like(mask)
    best: list[tuple[int, int]] = []
    for sy, sx in zip(*np.nonzero(mask)):
        if seen[sy, sx]:
            continue
        stack_ = [(int(sy), int(sx))]
        seen[sy, sx] = True
        comp = []
        while stack_:
            y, x = stack_.pop()
            comp.append((y, x))
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        stack_.append((ny, nx))
        if len(comp) > len(best):
            best = comp
    out = np.zeros_like(mask)
    for y, x in best:
        out[y, x] = True
    return out


def _prune_collinear(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    if len(points) < 3:
        return points
    out: list[tuple[int, int]] = []
    n = len(points)
    for i in range(n):
        prev, cur, nxt = points[i - 1], points[i], points[(i + 1) % n]
        v1 = (cur[0] - prev[0], cur[1] - prev[1])
        v2 = (nxt[0] - cur[0], nxt[1] - cur[1])
        if v1[0] * v2[1] - v1[1] * v2[0] != 0:
            out.append(cur)
    return out


def alpha_contour(
    stack: LayerStack, index: int, threshold: int = DEFAULT_ALPHA_THRESHOLD
) -> list[tuple[int, int]]:
    """Closed outer boundary of the layer's thresholded alpha mask.

    Vertices are pixel-corner coordinates walked clockwise; at pinch corners
    between diagonally-touching pixels the walk crosses over, so a region
    that is 8-connected yields a single contour. Collinear vertices are
    pruned; the closing edge back to the first vertex is implied.
    """
    mask = _largest_component(layer_support_mask(stack, index, threshold))
    if not mask.any():
        raise CompositorError(f"layer {index} has no alpha support above {threshold}")
    h, w = mask.shape

    def filled(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and bool(mask[y, x])

    # Directed corner edges with the filled pixel on the clockwise side.
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for y, x in zip(*np.nonzero(mask)):
        y, x = int(y), int(x)
        sides = (
            ((x, y), (x + 1, y), (x, y - 1)),  # top edge, neighbor above
            ((x + 1, y), (x + 1, y + 1), (x + 1, y)),  # right edge
            ((x + 1, y + 1), (x, y + 1), (x, y + 1)),  # bottom edge
            ((x, y + 1), (x, y), (x - 1, y)),  # left edge
        )
        for start, end, (nx, ny) in sides:
            if not filled(nx, ny):
                edges.setdefault(start, []).append(end)

    start = min(edges)
    path: list[tuple[int, int]] = [start]
    prev_dir: tuple[int, int] | None = None
    cur = start
    visited: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    while True:
        outs = edges.get(cur, [])
        if prev_dir is None:
            nxt = outs[0]
        elif len(outs) == 1:
            nxt = outs[0]
        else:
            # Pinch corner: prefer the left turn, which crosses to the
            # diagonally-adjacent pixel and keeps 8-connected regions whole.
            order = [_LEFT[prev_dir], prev_dir, _RIGHT[prev_dir]]
            ranked = [
                e for d in order for e in outs if (e[0] - cur[0], e[1] - cur[1]) == d
            ]
            nxt = next((e for e in ranked if (cur, e) not in visited), ranked[0])
        if (cur, nxt) in visited:
            break
        visited.add((cur, nxt))
        prev_dir = (nxt[0] - cur[0], nxt[1] - cur[1])
        path.append(nxt)
        cur = nxt
        if cur == start:
            break
    if path[-1] == path[0]:
        path = path[:-1]
    return _prune_collinear(path)


# --- stack directory convention ---------------------------------------------

STACK_META = "stack.json"


def load_stack(path: str | Path) -> LayerStack:
    """Load ``{NN}_{name}.png`` layers plus ``stack.json`` canvas metadata."""
    path = Path(path)
    meta_path = path / STACK_META
    if not meta_path.is_file():
        raise CompositorError(f"no {STACK_META} in {path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    offsets = {entry["file"]: tuple(entry["offset"]) for entry in meta.get("offsets", [])}
    layers = []
    for png in sorted(path.glob("*.png")):
        num, _, name = png.stem.partition("_")
        if not num.isdigit():
            raise CompositorError(f"layer file {png.name} does not match NN_name.png")
        layers.append((int(num), name, offsets.get(png.name, (0, 0)), images.load_png(png)))
    layers.sort(key=lambda t: t[0])
    return LayerStack(
        width=int(meta["width"]),
        height=int(meta["height"]),
        background=tuple(meta.get("background", [255, 255, 255, 255])),
        layers=tuple(Layer(img, off, name) for _, name, off, img in layers),
    )


def save_stack(stack: LayerStack, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    files = [f"{i:02d}_{layer.name}.png" for i, layer in enumerate(stack.layers)]
    meta = {
        "width": stack.width,
        "height": stack.height,
        "background": list(stack.background),
        "offsets": [
            {"file": f, "offset": list(l.offset)} for f, l in zip(files, stack.layers)
        ],
    }
    (path / STACK_META).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    for f, layer in zip(files, stack.layers):
        images.save_png(layer.image, path / f)
