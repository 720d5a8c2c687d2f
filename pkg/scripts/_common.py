"""Helpers shared by the experiment scripts."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from umbra.geometry import camera_from_view_spec
from umbra.oracle import ShadowConfiguration
from umbra.shapes import glyph
from umbra.silhouette import TargetImage

AXIS_VIEWS = ((0.0, 0.0), (math.pi / 2, 0.0), (0.0, math.pi / 2))


def glyph_views(names, size, window=0.9):
    views = []
    for name, (az, el) in zip(names, AXIS_VIEWS):
        cam = camera_from_view_spec(az, el, 3.0, "orthographic", window, size, size)
        views.append(ShadowConfiguration(TargetImage(glyph(name, size)), cam, name))
    return views


def dump(obj, path: Path) -> None:
    def conv(o):
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(type(o))
    path.write_text(json.dumps(obj, indent=2, default=conv) + "\n")


def smoothed(values, window=10):
    return np.convolve(values, np.ones(window) / window, mode="valid")
