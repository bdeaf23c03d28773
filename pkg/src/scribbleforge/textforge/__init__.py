"""Synthetic text-editing samples with pixel-exact supervision."""

from .atlas import GlyphAtlas, MissingGlyphError, default_atlas
from .doc import (
    StyleDelta,
    TextDoc,
    TextEditOp,
    TextLayoutError,
    TextOverflowError,
    Typography,
    apply_text_edit,
    layout_glyphs,
    render_text,
)
from .generate import TextGenConfig, build_text_sample, generate_text_dataset, last_line_band

__all__ = [
    "GlyphAtlas",
    "MissingGlyphError",
    "default_atlas",
    "StyleDelta",
    "TextDoc",
    "TextEditOp",
    "TextLayoutError",
    "TextOverflowError",
    "Typography",
    "apply_text_edit",
    "layout_glyphs",
    "render_text",
    "TextGenConfig",
    "build_text_sample",
    "generate_text_dataset",
    "last_line_band",
]
