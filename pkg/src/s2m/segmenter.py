"""Promptable segmentation on score maps and mask fusion.

The reference segmenter grows a region from the strongest pixel inside a
box prompt; externally produced masks (e.g. SAM exports) enter through
``read_masks``.  Fusion follows the union/min rule: the predicted OoD
region is the union of mask supports and every covered pixel takes the
lowest confidence among the masks covering it, which keeps false
positives down at small thresholds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import io as s2m_io
from .geometry import BoxPrompt
from .scoring import normalize_scores
from .validation import (
    ValidationError,
    check_binary_mask,
    check_score_map,
)


@dataclass(frozen=True)
class SegmenterConfig:
    alpha: float = 0.5    # growth level, fraction of the seed score
    margin: float = 0.1   # box expansion fraction per side

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha {self.alpha} outside (0, 1]")
        if self.margin < 0.0:
            raise ValidationError("margin must be non-negative")


@dataclass(frozen=True)
class PromptMask:
    mask: np.ndarray
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "mask", check_binary_mask(self.mask))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")


def segment_with_box(score_map, box: BoxPrompt,
                     cfg: SegmenterConfig = SegmenterConfig()) -> PromptMask:
    """Box-constrained region growing on the normalized score map.

    The seed is the maximum normalized score inside the original box (ties
    break toward the smallest (y, x)).  The mask is the 4-connected flood
    fill from the seed over pixels with normalized score >= alpha * seed
    score, restricted to the box expanded by ``margin`` of its own size
    per side.  A zero seed degenerates to the seed pixel alone.
    """
    arr = check_score_map(score_map)
    h, w = arr.shape
    box.check_within(w, h)
    norm = normalize_scores(arr)

    inside = norm[box.y0:box.y1, box.x0:box.x1]
    flat_idx = int(np.argmax(inside))  # argmax is first-in-C-order, i.e. smallest (y, x)
    seed_y = box.y0 + flat_idx // box.width
    seed_x = box.x0 + flat_idx % box.width
    seed_score = float(norm[seed_y, seed_x])

    mask = np.zeros((h, w), dtype=bool)
    if seed_score == 0.0:
        mask[seed_y, seed_x] = True
        return PromptMask(mask=mask, confidence=box.confidence)

    mx = int(round(cfg.margin * box.width))
    my = int(round(cfg.margin * box.height))
    rx0, ry0 = max(0, box.x0 - mx), max(0, box.y0 - my)
    rx1, ry1 = min(w, box.x1 + mx), min(h, box.y1 + my)

    region = np.zeros((h, w), dtype=bool)
    region[ry0:ry1, rx0:rx1] = norm[ry0:ry1, rx0:rx1] >= cfg.alpha * seed_score
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    labeled, _ = ndimage.label(region, structure=structure)
    mask = labeled == labeled[seed_y, seed_x]
    return PromptMask(mask=mask, confidence=box.confidence)


def fuse_masks(masks, width: int, height: int) -> np.ndarray:
    """Union/min fusion of prompt masks into a confidence map.

    Uncovered pixels are 0 (in-distribution by contract); covered pixels
    take the minimum confidence among their covering masks.
    """
    fused = np.zeros((height, width), dtype=np.float64)
    covered = np.zeros((height, width), dtype=bool)
    for pm in masks:
        if pm.mask.shape != (height, width):
            raise ValidationError(
                f"mask shape {pm.mask.shape} does not match ({height}, {width})"
            )
        overlap = covered & pm.mask
        fused[overlap] = np.minimum(fused[overlap], pm.confidence)
        fresh = pm.mask & ~covered
        fused[fresh] = pm.confidence
        covered |= pm.mask
    return fused


def binarize_confidence(conf_map) -> np.ndarray:
    """Threshold-free final mask: a pixel is OoD iff its confidence > 0."""
    arr = check_score_map(conf_map, "confidence map")
    return arr > 0.0


def read_masks(mask_paths, confidences_path) -> list[PromptMask]:
    """Load external mask PNGs plus their index-aligned confidence sidecar.

    The sidecar is ``{"confidences": [c0, c1, ...]}`` ordered like the
    sorted mask paths.
    """
    paths = sorted(Path(p) for p in mask_paths)
    with open(confidences_path) as fp:
        doc = json.load(fp)
    confs = doc.get("confidences")
    if not isinstance(confs, list):
        raise ValidationError(f"{confidences_path}: missing 'confidences' list")
    if len(confs) != len(paths):
        raise ValidationError(
            f"{len(paths)} masks but {len(confs)} confidences"
        )
    masks = []
    shape = None
    for path, conf in zip(paths, confs):
        m = s2m_io.read_binary_mask(path)
        if shape is None:
            shape = m.shape
        elif m.shape != shape:
            raise ValidationError(f"{path}: mask shape {m.shape} != {shape}")
        masks.append(PromptMask(mask=m, confidence=float(conf)))
    return masks
