#!/usr/bin/env python3
"""Generate the committed fixture data: layered stacks, an object pool, and
stand-in "real" photos with precomputed masks for the stage-2 stub clients.

Deterministic; re-running reproduces the same files byte for byte.

Usage: python scripts/make_fixtures.py [fixtures_dir]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from scribbleforge.compositor import Layer, LayerStack, save_stack
from scribbleforge.images import ImageBuffer, save_mask_png, save_png
from scribbleforge.rng import Rng

SIZE = 128

OBJECT_NOUNS = [
    "ball", "ring", "star", "leaf", "block", "heart", "moon", "drop", "gem", "flag",
]

OBJECT_COLORS = [
    (204, 72, 56), (66, 134, 196), (88, 166, 92), (212, 164, 60), (150, 88, 180),
    (64, 170, 170), (220, 120, 160), (120, 120, 64), (90, 110, 200), (190, 90, 40),
]


def _aa_mask(shape_fn, side: int, ss: int = 4) -> np.ndarray:
    """Supersampled coverage of shape_fn(x, y) -> bool over [0,1]^2."""
    n = side * ss
    ys, xs = np.mgrid[0:n, 0:n]
    fx = (xs + 0.5) / n
    fy = (ys + 0.5) / n
    hit = shape_fn(fx, fy).astype(np.float64)
    cov = hit.reshape(side, ss, side, ss).mean(axis=(1, 3))
    return np.floor(cov * 255 + 0.5).astype(np.uint8)


def make_object(noun: str, color, side: int, rng: Rng) -> ImageBuffer:
    kind = OBJECT_NOUNS.index(noun) % 5
    wobble = rng.uniform(0.9, 1.1)

    if kind == 0:  # disc
        fn = lambda x, y: (x - 0.5) ** 2 + (y - 0.5) ** 2 <= (0.42 * wobble) ** 2
    elif kind == 1:  # ring
        def fn(x, y):
            r2 = (x - 0.5) ** 2 + (y - 0.5) ** 2
            return (r2 <= 0.45**2) & (r2 >= (0.26 * wobble) ** 2)
    elif kind == 2:  # four-point star
        def fn(x, y):
            dx, dy = np.abs(x - 0.5), np.abs(y - 0.5)
            return (dx**1.6 + dy**1.6) ** (1 / 1.6) * 1.15 + np.minimum(dx, dy) <= 0.5 * wobble
    elif kind == 3:  # leaf (two arcs)
        def fn(x, y):
            a = (x - 0.18) ** 2 + (y - 0.82) ** 2 <= 0.72**2
            b = (x - 0.82) ** 2 + (y - 0.18) ** 2 <= 0.72**2
            return a & b
    else:  # rounded block
        def fn(x, y):
            dx, dy = np.abs(x - 0.5), np.abs(y - 0.5)
            return np.maximum(dx, dy) + 0.35 * np.minimum(dx, dy) <= 0.42 * wobble

    alpha = _aa_mask(fn, side)
    arr = np.zeros((side, side, 4), dtype=np.uint8)
    # gentle vertical shading keeps objects from looking flat
    shade = np.linspace(1.08, 0.85, side)[:, None]
    for c in range(3):
        arr[..., c] = np.clip(color[c] * shade, 0, 255).astype(np.uint8)
    arr[..., 3] = alpha
    return ImageBuffer(arr)


def make_backdrop(rng: Rng, w: int, h: int) -> ImageBuffer:
    top = np.array([rng.integers(140, 220) for _ in range(3)], dtype=np.float64)
    bottom = np.array([rng.integers(60, 140) for _ in range(3)], dtype=np.float64)
    tt = np.linspace(0.0, 1.0, h)[:, None, None]
    rgb = top[None, None, :] * (1 - tt) + bottom[None, None, :] * tt
    noise = rng.normal(size=(h, w, 1)) * 2.0
    arr = np.zeros((h, w, 4), dtype=np.uint8)
    arr[..., :3] = np.clip(rgb + noise, 0, 255).astype(np.uint8)
    arr[..., 3] = 255
    return ImageBuffer(arr)


def make_stack(rng: Rng, n_objects: int) -> LayerStack:
    layers = [Layer(make_backdrop(rng.spawn("bg"), SIZE, SIZE), (0, 0), "backdrop")]
    used = []
    for j in range(n_objects):
        r = rng.spawn(f"obj{j}")
        noun = OBJECT_NOUNS[r.integers(0, len(OBJECT_NOUNS))]
        color = OBJECT_COLORS[r.integers(0, len(OBJECT_COLORS))]
        side = r.integers(28, 52)
        img = make_object(noun, color, side, r)
        for _ in range(10):
            x = r.integers(4, SIZE - side - 4)
            y = r.integers(4, SIZE - side - 4)
            if all(abs(x - ux) + abs(y - uy) > side * 0.9 for ux, uy in used):
                break
        used.append((x, y))
        layers.append(Layer(img, (x, y), noun))
    return LayerStack(width=SIZE, height=SIZE, background=(24, 24, 32, 255), layers=tuple(layers))


def make_real_photo(rng: Rng, w: int = 160, h: int = 128):
    """A fake photograph: sky/ground composition with one salient object."""
    sky_top = np.array([rng.integers(120, 200), rng.integers(150, 210), rng.integers(200, 250)])
    ground = np.array([rng.integers(60, 110), rng.integers(90, 140), rng.integers(40, 80)])
    horizon = rng.integers(h // 2, 3 * h // 4)
    arr = np.zeros((h, w, 4), dtype=np.uint8)
    tt = np.linspace(0, 1.3, horizon)[:, None, None]
    arr[:horizon, :, :3] = np.clip(sky_top[None, None] * (1 - tt * 0.4), 0, 255).astype(np.uint8)
    gg = np.linspace(0, 1, h - horizon)[:, None, None]
    arr[horizon:, :, :3] = np.clip(ground[None, None] * (1 - gg * 0.35) + 20, 0, 255).astype(
        np.uint8
    )
    arr[..., 3] = 255
    texture = rng.normal(size=(h, w, 1)) * 3.0
    arr[..., :3] = np.clip(arr[..., :3] + texture, 0, 255).astype(np.uint8)

    noun = OBJECT_NOUNS[rng.integers(0, len(OBJECT_NOUNS))]
    color = OBJECT_COLORS[rng.integers(0, len(OBJECT_COLORS))]
    side = rng.integers(30, 50)
    obj = make_object(noun, color, side, rng.spawn("obj"))
    x = rng.integers(10, w - side - 10)
    y = rng.integers(10, h - side - 10)

    mask = np.zeros((h, w), dtype=bool)
    alpha = obj.array[..., 3].astype(np.float64) / 255.0
    region = arr[y : y + side, x : x + side, :3].astype(np.float64)
    arr[y : y + side, x : x + side, :3] = np.floor(
        region * (1 - alpha[..., None]) + obj.array[..., :3] * alpha[..., None] + 0.5
    ).astype(np.uint8)
    mask[y : y + side, x : x + side] = obj.array[..., 3] > 8
    return ImageBuffer(arr), mask, noun


def main() -> None:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fixtures")
    rng = Rng(20260810, "fixtures")

    stacks_dir = root / "stacks"
    for i in range(8):
        r = rng.spawn(f"stack{i}")
        stack = make_stack(r, n_objects=r.integers(2, 5))
        save_stack(stack, stacks_dir / f"stack_{i:03d}")

    objects_dir = root / "objects"
    for i, noun in enumerate(OBJECT_NOUNS):
        r = rng.spawn(f"pool{i}")
        img = make_object(noun, OBJECT_COLORS[(i + 3) % len(OBJECT_COLORS)], 48, r)
        save_png(img, objects_dir / f"{noun}.png")

    real_dir = root / "real"
    tasks = ["removal", "replacement", "addition", "translation"]
    for i in range(6):
        r = rng.spawn(f"real{i}")
        img, mask, noun = make_real_photo(r)
        name = f"photo_{i:03d}"
        save_png(img, real_dir / f"{name}.png")
        save_mask_png(mask, real_dir / f"{name}.mask.png")
        meta = {"object": noun, "task": tasks[i % len(tasks)]}
        (real_dir / f"{name}.json").write_text(json.dumps(meta, indent=2) + "\n")

    print(f"fixtures written under {root}/ (8 stacks, {len(OBJECT_NOUNS)} objects, 6 photos)")


if __name__ == "__main__":
    main()
