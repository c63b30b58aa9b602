"""Deterministic stand-in models behind a loadable-by-name registry.

Real deployments plug a pretrained OoD detector or promptable segmenter
in here; for testing and offline work the registry ships pixel-level
stand-ins that are cheap, deterministic, and produce score maps with the
same shape contract as the real thing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import AdapterError


@dataclass
class ExportJob:
    """One batch export: a model name, the images to run, a destination."""

    model: str
    images: list = field(default_factory=list)
    out_dir: Path = Path(".")
    device: str = "cpu"

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.images = [Path(p) for p in self.images]


def _luminance(image: np.ndarray) -> np.ndarray:
    """Rec.601 luma, scaled to [0, 1]; bright pixels score high."""
    w = np.array([0.299, 0.587, 0.114])
    return (image.astype(np.float64) @ w) / 255.0


def _channel_range(image: np.ndarray) -> np.ndarray:
    """Per-pixel spread across RGB; saturated colors score high."""
    arr = image.astype(np.float64)
    return (arr.max(axis=2) - arr.min(axis=2)) / 255.0


def _inverted_luminance(image: np.ndarray) -> np.ndarray:
    return 1.0 - _luminance(image)


_REGISTRY = {
    "luminance": _luminance,
    "channel-range": _channel_range,
    "inverted-luminance": _inverted_luminance,
}


def available_models() -> list:
    return sorted(_REGISTRY)


def load_model(name: str):
    """Resolve a model name to a callable image -> HxW float score map."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise AdapterError(
            f"cannot load model {name!r}; available: {', '.join(available_models())}"
        ) from None


def box_fill_segmenter(image: np.ndarray, box: tuple) -> np.ndarray:
    """Stand-in promptable segmenter: the mask is the box interior.

    A real model would take the image into account; the stand-in only
    needs to honor the geometry contract.
    """
    h, w = image.shape[:2]
    x0, y0, x1, y1 = box
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise AdapterError(f"box {box} does not fit a {w}x{h} image")
    mask = np.zeros((h, w), dtype=bool)
    mask[y0:y1, x0:x1] = True
    return mask
