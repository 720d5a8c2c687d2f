"""Procedural target silhouettes for demos and tests.

Every glyph touches all four sides of a centered square box, so any three of
them placed on orthogonal axis views are mutually consistent: each row and
column of the box is covered in every view.
"""
from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw


def _canvas(size: int):
    img = Image.new("L", (size, size), 0)
    return img, ImageDraw.Draw(img)


def _box(size: int, fill: float):
    half = size * fill / 2.0
    c = size / 2.0
    return c - half, c - half, c + half, c + half


def _finish(img) -> np.ndarray:
    return (np.asarray(img, dtype=np.float64) >= 128).astype(np.float64)


def disc(size: int = 64, fill: float = 0.6) -> np.ndarray:
    img, draw = _canvas(size)
    x0, y0, x1, y1 = _box(size, fill)
    draw.ellipse([x0, y0, x1 - 1, y1 - 1], fill=255)
    return _finish(img)


def square(size: int = 64, fill: float = 0.6) -> np.ndarray:
    img, draw = _canvas(size)
    x0, y0, x1, y1 = _box(size, fill)
    draw.rectangle([x0, y0, x1 - 1, y1 - 1], fill=255)
    return _finish(img)


def triangle(size: int = 64, fill: float = 0.6) -> np.ndarray:
    img, draw = _canvas(size)
    x0, y0, x1, y1 = _box(size, fill)
    draw.polygon([((x0 + x1) / 2, y0), (x1 - 1, y1 - 1), (x0, y1 - 1)], fill=255)
    return _finish(img)


def _strokes(size, fill, rects):
    """Block glyph from rectangles given in unit-box coordinates."""
    img, draw = _canvas(size)
    x0, y0, x1, y1 = _box(size, fill)
    w, h = x1 - x0, y1 - y0
    for a, b, c, d in rects:
        draw.rectangle([x0 + a * w, y0 + b * h, x0 + c * w - 1, y0 + d * h - 1], fill=255)
    return _finish(img)


def letter(ch: str, size: int = 64, fill: float = 0.6, stroke: float = 0.28) -> np.ndarray:
    s = stroke
    glyphs = {
        "L": [(0, 0, s, 1), (0, 1 - s, 1, 1)],
        "T": [(0, 0, 1, s), ((1 - s) / 2, 0, (1 + s) / 2, 1)],
        "H": [(0, 0, s, 1), (1 - s, 0, 1, 1), (0, (1 - s) / 2, 1, (1 + s) / 2)],
        "I": [(0, 0, 1, s), ((1 - s) / 2, 0, (1 + s) / 2, 1), (0, 1 - s, 1, 1)],
        "E": [(0, 0, s, 1), (0, 0, 1, s), (0, (1 - s) / 2, 0.8, (1 + s) / 2), (0, 1 - s, 1, 1)],
        "U": [(0, 0, s, 1), (1 - s, 0, 1, 1), (0, 1 - s, 1, 1)],
        "C": [(0, 0, s, 1), (0, 0, 1, s), (0, 1 - s, 1, 1)],
        "X": None,
        "+": [(0, (1 - s) / 2, 1, (1 + s) / 2), ((1 - s) / 2, 0, (1 + s) / 2, 1)],
    }
    if ch not in glyphs:
        raise ValueError(f"no glyph for {ch!r}")
    if ch == "X":
        img, draw = _canvas(size)
        x0, y0, x1, y1 = _box(size, fill)
        width = max(1, int(round(s * (x1 - x0) * 0.7)))
        draw.line([(x0, y0), (x1 - 1, y1 - 1)], fill=255, width=width)
        draw.line([(x0, y1 - 1), (x1 - 1, y0)], fill=255, width=width)
        return _finish(img)
    return _strokes(size, fill, glyphs[ch])


def annulus(size: int = 64, fill: float = 0.6, inner: float = 0.45) -> np.ndarray:
    """Ring (non-simply-connected target)."""
    outer = disc(size, fill)
    hole = disc(size, fill * inner)
    return outer * (1.0 - hole)


_NAMED = {"disc": disc, "square": square, "triangle": triangle, "annulus": annulus}


def glyph(name: str, size: int = 64, fill: float = 0.6) -> np.ndarray:
    """Target by name: ``disc``, ``square``, ``triangle``, ``annulus`` or a letter glyph."""
    if name in _NAMED:
        return _NAMED[name](size, fill)
    return letter(name, size, fill)
