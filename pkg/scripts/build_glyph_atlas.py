#!/usr/bin/env python3
"""Build the bundled glyph atlas (atlas.bin + atlas.json).

Run once; the outputs are committed as package data so text rendering never
touches a system font stack at runtime. Latin coverage is pre-rasterized
from a vector font available at build time. The CJK subset uses synthesized
ideograph stand-ins: each codepoint gets a deterministic grid-stroke glyph
with correct em metrics. They are not typographically faithful, but give
every covered codepoint a distinct, reproducible bitmap, which is all the
text-editing pipeline needs.

Usage: python scripts/build_glyph_atlas.py [out_dir]
"""

from __future__ import annotations

import hashlib
import json
import sys
import unicodedata
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

FONT_SIZE = 20  # DejaVuSans at 20px has ascent 19 + descent 5 = em 24
EM = 24
ASCENT = 19
DESCENT = 5
SUPERSAMPLE = 4

# ~500 frequent CJK ideographs (plus CJK punctuation handled separately).
COMMON_CJK = (
    "的一是不了人我在有他这中大来上国个到说们为子和你地出道也时年得就那要下以生会自着去之过家学对可她里"
    "后小么心多天而能好都然没日于起还发成事只作当想看文无开手十用主行方又如前所本见经头面公同三已老从动"
    "两长知民样现分将外但身些与高意进把法此实回二理美点月明其种声全工己话儿者向情部正名定女问力机给等几"
    "很业最间新什打便位因重被走电四第门相次东政海口使教西再平真听世气信北少关并内加化由却代军产入先山五"
    "太水万市眼体别处总才场师书比住员九笑性通目华报立马命张活难神数件安表原车白应路期叫死常提感金何更反"
    "合放做系计或司利受光王果亲界及今京务制解各任至清物台象记边共风战干接它许八特觉望直服毛林题建南度统"
    "色字请交爱让火像司音近强测量红且步究室派性格百食住떠穿村风雪云星空雨晴桥河湖海岛森林木花草叶根鸟鱼"
    "虫马牛羊犬猫米面茶酒肉菜汤饭馆店街巷城乡村镇区县省港湾岸滩岩沙土石金银铜铁玉砖瓦窗门墙顶楼梯桌椅床"
    "灯笔墨纸砚剑刀弓箭旗鼓钟表镜瓶壶碗盘筷勺巾衣裤鞋帽布丝绸棉麻皮革骨血肤发眉眼耳鼻舌牙唇喉肩背胸腹腰"
    "腿脚指拳掌臂肘膝踝趾脑肝肺胃肠肾骼圆方角线点段形状貌影象数量度衡尺寸斤两升斗石亩顷里程速率温湿冷热"
)


def _unique_cjk(limit: int = 500) -> list[int]:
    seen: list[int] = []
    for ch in COMMON_CJK:
        cp = ord(ch)
        if not 0x4E00 <= cp <= 0x9FFF:  # CJK Unified Ideographs only
            continue
        if unicodedata.category(ch) != "Lo":
            continue
        if cp not in seen:
            seen.append(cp)
        if len(seen) >= limit:
            return seen
    # top up from the head of the block if the curated list runs short
    cp = 0x4E00
    while len(seen) < limit:
        if cp not in seen:
            seen.append(cp)
        cp += 1
    return seen


def _find_font() -> str:
    import matplotlib

    return str(Path(matplotlib.get_data_path()) / "fonts" / "ttf" / "DejaVuSans.ttf")


def render_latin(font: ImageFont.FreeTypeFont, ch: str) -> dict | None:
    pad = EM * 2
    im = Image.new("L", (pad * 4, pad * 4), 0)
    draw = ImageDraw.Draw(im)
    draw.text((pad, pad), ch, font=font, fill=255)
    adv = int(round(draw.textlength(ch, font=font)))
    box = im.getbbox()
    if box is None:  # whitespace
        return {"adv": adv, "w": 0, "h": 0, "left": 0, "top": 0, "bitmap": b""}
    x0, y0, x1, y1 = box
    baseline = pad + ASCENT
    bitmap = np.asarray(im)[y0:y1, x0:x1]
    return {
        "adv": adv,
        "w": int(x1 - x0),
        "h": int(y1 - y0),
        "left": int(x0 - pad),
        "top": int(baseline - y0),
        "bitmap": bitmap.tobytes(),
    }


def _cjk_rng(codepoint: int) -> np.random.Generator:
    digest = hashlib.sha256(f"glyph:{codepoint}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def render_cjk(codepoint: int) -> dict:
    """Deterministic grid-stroke stand-in glyph filling the em square."""
    side = EM * SUPERSAMPLE
    margin = 2 * SUPERSAMPLE
    thick = int(1.6 * SUPERSAMPLE)
    hi = np.zeros((side, side), dtype=np.float64)
    gen = _cjk_rng(codepoint)
    lo, hi_edge = margin, side - margin
    span = hi_edge - lo

    def hline(frac, x0=0.0, x1=1.0):
        y = lo + int(frac * (span - thick))
        a = lo + int(x0 * span)
        b = lo + int(x1 * span)
        hi[y : y + thick, a:b] = 1.0

    def vline(frac, y0=0.0, y1=1.0):
        x = lo + int(frac * (span - thick))
        a = lo + int(y0 * span)
        b = lo + int(y1 * span)
        hi[a:b, x : x + thick] = 1.0

    n_h = int(gen.integers(1, 4))
    n_v = int(gen.integers(1, 4))
    for frac in sorted(gen.uniform(0.0, 1.0, size=n_h)):
        hline(float(frac), float(gen.uniform(0.0, 0.25)), float(gen.uniform(0.75, 1.0)))
    for frac in sorted(gen.uniform(0.0, 1.0, size=n_v)):
        vline(float(frac), float(gen.uniform(0.0, 0.25)), float(gen.uniform(0.75, 1.0)))
    if gen.uniform() < 0.5:  # enclosing radical
        hline(0.0)
        hline(1.0)
        vline(0.0)
        vline(1.0)
    if gen.uniform() < 0.4:  # one diagonal
        steps = span
        x = np.linspace(lo, hi_edge - thick, steps)
        y = np.linspace(lo, hi_edge - thick, steps)
        if gen.uniform() < 0.5:
            x = x[::-1]
        for xi, yi in zip(x.astype(int), y.astype(int)):
            hi[yi : yi + thick, xi : xi + thick] = 1.0

    down = hi.reshape(EM, SUPERSAMPLE, EM, SUPERSAMPLE).mean(axis=(1, 3))
    bitmap = np.floor(down * 255.0 + 0.5).astype(np.uint8)
    ys, xs = np.nonzero(bitmap)
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    trimmed = bitmap[y0:y1, x0:x1]
    return {
        "adv": EM,
        "w": int(x1 - x0),
        "h": int(y1 - y0),
        "left": int(x0),
        "top": int(ASCENT - 1 - y0),
        "bitmap": trimmed.tobytes(),
    }


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("src/scribbleforge/textforge/data")
    out_dir.mkdir(parents=True, exist_ok=True)

    font = ImageFont.truetype(_find_font(), FONT_SIZE)
    glyphs: dict[str, dict] = {}
    blob = bytearray()

    def add(codepoint: int, rec: dict) -> None:
        entry = {
            "off": len(blob),
            "w": rec["w"],
            "h": rec["h"],
            "left": rec["left"],
            "top": rec["top"],
            "adv": rec["adv"],
        }
        blob.extend(rec["bitmap"])
        glyphs[str(codepoint)] = entry

    for cp in range(32, 127):
        rec = render_latin(font, chr(cp))
        if rec is not None:
            add(cp, rec)
    cjk = _unique_cjk()
    for cp in cjk:
        add(cp, render_cjk(cp))

    meta = {
        "em": EM,
        "ascent": ASCENT,
        "descent": DESCENT,
        "glyphs": glyphs,
    }
    (out_dir / "atlas.bin").write_bytes(bytes(blob))
    (out_dir / "atlas.json").write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
    print(f"atlas: {len(glyphs)} glyphs ({len(cjk)} CJK), {len(blob)} bytes of bitmaps")


if __name__ == "__main__":
    main()
