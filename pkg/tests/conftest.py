import math

import numpy as np
import pytest

from scribbleforge.compositor import Layer, LayerStack
from scribbleforge.images import ImageBuffer
from scribbleforge.rng import Rng


def scalar_over(dst_px, src_px):
    """Reference Porter-Duff source-over for one pixel, plain Python floats."""
    sa = src_px[3] / 255.0
    da = dst_px[3] / 255.0
    out_a = sa + da * (1.0 - sa)
    out = []
    for ch in range(3):
        num = src_px[ch] * sa + dst_px[ch] * da * (1.0 - sa)
        out.append(num / out_a if out_a > 0 else 0.0)
    out.append(out_a * 255.0)
    return [int(math.floor(v + 0.5)) for v in out]


def composite_oracle(stack: LayerStack) -> np.ndarray:
    """Brute-force per-pixel compositing of a whole stack."""
    out = [[list(stack.background) for _ in range(stack.width)] for _ in range(stack.height)]
    for layer in stack.layers:
        ox, oy = layer.offset
        arr = layer.image.array
        for ly in range(layer.image.height):
            for lx in range(layer.image.width):
                cx, cy = ox + lx, oy + ly
                if 0 <= cx < stack.width and 0 <= cy < stack.height:
                    out[cy][cx] = scalar_over(out[cy][cx], [int(v) for v in arr[ly, lx]])
    return np.array(out, dtype=np.uint8)


def random_image(rng: Rng, w: int, h: int, opaque: bool = False) -> ImageBuffer:
    a = rng._gen.integers(0, 256, size=(h, w, 4), dtype=np.uint8)
    if opaque:
        a[..., 3] = 255
    return ImageBuffer.from_array(a)


def random_stack(rng: Rng, max_side: int = 8, max_layers: int = 4) -> LayerStack:
    w = rng.integers(1, max_side + 1)
    h = rng.integers(1, max_side + 1)
    bg = tuple(int(v) for v in rng._gen.integers(0, 256, size=4))
    layers = []
    for i in range(rng.integers(0, max_layers + 1)):
        lw = rng.integers(1, max_side + 1)
        lh = rng.integers(1, max_side + 1)
        ox = rng.integers(-3, w + 3)
        oy = rng.integers(-3, h + 3)
        layers.append(Layer(random_image(rng, lw, lh), (ox, oy), f"l{i}"))
    return LayerStack(width=w, height=h, background=bg, layers=tuple(layers))


@pytest.fixture
def rng():
    return Rng(20260810, "tests")
