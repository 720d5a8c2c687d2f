"""Target shadow images and silhouette overlap metrics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

BINARY = "binary"
GRAYSCALE = "grayscale"

# 8-bit modes accepted as-is or converted through luminance
_GRAY_MODES = {"L", "1", "P"}
_COLOR_MODES = {"RGB", "RGBA", "LA", "P"}

ORANGE = np.array([255, 140, 0], dtype=np.uint8)
BLUE = np.array([30, 90, 255], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class TargetImage:
    """Per-pixel shadow coverage in [0, 1]; 1 marks shadow (foreground)."""

    values: np.ndarray
    mode: str = BINARY

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ValueError(f"target must be a non-empty 2D array, got shape {v.shape}")
        if np.any(~np.isfinite(v)) or v.min() < 0 or v.max() > 1:
            raise ValueError("target values must lie in [0, 1]")
        if self.mode not in (BINARY, GRAYSCALE):
            raise ValueError(f"unknown target mode {self.mode!r}")
        if self.mode == BINARY and not np.all((v == 0) | (v == 1)):
            raise ValueError("binary target values must be 0 or 1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def resampled(self, width: int, height: int) -> "TargetImage":
        """Nearest-neighbor for binary targets, bilinear for grayscale."""
        if (width, height) == (self.width, self.height):
            return self
        img = Image.fromarray(self.values.astype(np.float32), mode="F")
        if self.mode == BINARY:
            out = np.asarray(img.resize((width, height), Image.Resampling.NEAREST))
            return TargetImage((out >= 0.5).astype(np.float64), BINARY)
        out = np.asarray(img.resize((width, height), Image.Resampling.BILINEAR), dtype=np.float64)
        return TargetImage(np.clip(out, 0.0, 1.0), GRAYSCALE)


def _luminance(path: Path) -> np.ndarray:
    try:
        img = Image.open(path)
        img.load()
    except (OSError, UnidentifiedImageError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if img.width == 0 or img.height == 0:
        raise ValueError(f"{path}: zero-size image")
    if img.mode not in _GRAY_MODES | _COLOR_MODES:
        raise ValueError(f"{path}: unsupported image mode {img.mode!r} (need 8-bit gray or RGB)")
    if img.mode in ("RGBA", "LA", "P"):
        img = img.convert("RGB")
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0


def load_target(path, threshold: float = 0.5, mode: str = BINARY, invert: bool = False) -> TargetImage:
    """Read an 8-bit gray/RGB PNG or PGM as a target image.

    Binary mode marks a pixel as shadow iff ``luminance >= threshold`` XOR
    ``invert``.  Use ``invert=True`` for dark shadows drawn on a light ground.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    lum = _luminance(Path(path))
    if mode == BINARY:
        mask = (lum >= threshold) ^ bool(invert)
        return TargetImage(mask.astype(np.float64), BINARY)
    if mode == GRAYSCALE:
        return TargetImage(1.0 - lum if invert else lum, GRAYSCALE)
    raise ValueError(f"unknown target mode {mode!r}")


def save_image(values, path) -> None:
    """Write a [0, 1] image as 8-bit grayscale PNG; (H, W, 3) uint8 arrays go out as RGB."""
    arr = np.asarray(values)
    if arr.ndim == 3:
        if arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise ValueError(f"expected (H, W, 3) uint8 for RGB output, got {arr.shape} {arr.dtype}")
        Image.fromarray(arr, mode="RGB").save(path)
        return
    arr = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="L").save(path)


def _values(img) -> np.ndarray:
    return img.values if isinstance(img, TargetImage) else np.asarray(img, dtype=np.float64)


def _masks(a, b, bin_threshold: float):
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    return va >= bin_threshold, vb >= bin_threshold


def iou(a, b, bin_threshold: float = 0.5) -> float:
    ma, mb = _masks(a, b, bin_threshold)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 1.0
    return np.count_nonzero(ma & mb) / union


def dice(a, b, bin_threshold: float = 0.5) -> float:
    ma, mb = _masks(a, b, bin_threshold)
    total = np.count_nonzero(ma) + np.count_nonzero(mb)
    if total == 0:
        return 1.0
    return 2.0 * np.count_nonzero(ma & mb) / total


def inconsistency_overlay(rendered, target, bin_threshold: float = 0.5) -> np.ndarray:
    """RGB overlay of shadow mismatches.

    Target shadow the sculpture fails to cast is orange; stray shadow cast
    onto the target's background is blue.  Agreeing shadow is dark gray on a
    white ground.
    """
    r, t = _masks(rendered, target, bin_threshold)
    out = np.full(r.shape + (3,), 255, dtype=np.uint8)
    out[r & t] = 60
    out[t & ~r] = ORANGE
    out[r & ~t] = BLUE
    return out


@dataclass
class ViewMetrics:
    name: str
    iou: float
    dice: float


@dataclass
class MetricReport:
    views: list[ViewMetrics] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, rendered, targets, names=None, bin_threshold: float = 0.5) -> "MetricReport":
        names = names or [f"view{i}" for i in range(len(targets))]
        views = [ViewMetrics(n, iou(r, t, bin_threshold), dice(r, t, bin_threshold))
                 for n, r, t in zip(names, rendered, targets)]
        return cls(views)

    @property
    def mean_iou(self) -> float:
        return float(np.mean([v.iou for v in self.views])) if self.views else float("nan")

    @property
    def mean_dice(self) -> float:
        return float(np.mean([v.dice for v in self.views])) if self.views else float("nan")

    def to_dict(self) -> dict:
        doc = {
            "views": [{"name": v.name, "iou": v.iou, "dice": v.dice} for v in self.views],
            "mean_iou": self.mean_iou,
            "mean_dice": self.mean_dice,
        }
        doc.update(self.extra)
        return doc

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")
