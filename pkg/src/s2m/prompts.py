"""Score map to box prompts.

The reference generator is deliberately threshold-free in the sense that
matters: it binarizes at an order statistic (a quantile of the per-image
normalized scores), so no dataset-tuned absolute cutoff exists and any
strictly increasing rescaling of the scores leaves the boxes unchanged.
Externally generated prompts (e.g. from a trained detector) enter through
the JSON round-trip functions instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import BoxPrompt, box_iou
from .scoring import normalize_scores
from .synth import _structure
from .validation import ValidationError, check_score_map

_MAX_MERGE_ROUNDS = 100


@dataclass(frozen=True)
class PromptGenConfig:
    quantile: float = 0.95
    min_area: int = 16
    merge_iou: float = 0.5
    connectivity: int = 8

    def __post_init__(self):
        if not 0.0 < self.quantile < 1.0:
            raise ValidationError(f"quantile {self.quantile} outside (0, 1)")
        if self.min_area < 0:
            raise ValidationError("min_area must be non-negative")
        if not 0.0 <= self.merge_iou <= 1.0:
            raise ValidationError(f"merge_iou {self.merge_iou} outside [0, 1]")
        if self.connectivity not in (4, 8):
            raise ValidationError("connectivity must be 4 or 8")


@dataclass(frozen=True)
class NoiseSpec:
    amplitude: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.amplitude < 1.0:
            raise ValidationError(f"noise amplitude {self.amplitude} outside [0, 1)")


def perturb_scores(score_map, spec: NoiseSpec) -> np.ndarray:
    """Multiplicative per-pixel jitter: v -> v * (1 + u), u ~ U(-p, p)."""
    arr = check_score_map(score_map)
    if spec.amplitude == 0.0:
        return arr.copy()
    rng = np.random.default_rng(spec.seed)
    u = rng.uniform(-spec.amplitude, spec.amplitude, size=arr.shape)
    return arr * (1.0 + u)


def generate_prompts(score_map, cfg: PromptGenConfig = PromptGenConfig()) -> list[BoxPrompt]:
    """Reference box-prompt generator.

    Pipeline: per-image normalization, binarization strictly above the
    ``cfg.quantile`` order statistic, connected components, small-component
    rejection, one minimal box per component, then iterative merging of box
    pairs whose pairwise IoU exceeds ``cfg.merge_iou`` into their joint
    bounding box.  Confidence is the mean normalized score over the pixels
    of the originating component(s).  Boxes return sorted by descending
    confidence; a constant map yields no boxes.
    """
    norm = normalize_scores(score_map)
    flat = np.sort(norm, axis=None)
    # 'lower' order statistic keeps binarization purely rank-based
    thresh = flat[int(np.floor(cfg.quantile * (flat.size - 1)))]
    binary = norm > thresh
    labeled, n = ndimage.label(binary, structure=_structure(cfg.connectivity))
    if n == 0:
        return []
    areas = np.bincount(labeled.ravel())
    sums = ndimage.sum_labels(norm, labeled, index=np.arange(1, n + 1))

    # each candidate carries (box, score sum, pixel area); components are
    # disjoint, so a merged box's mean score is just the pooled ratio
    cands: list[list] = []
    for comp, sl in enumerate(ndimage.find_objects(labeled), start=1):
        if sl is None or areas[comp] < cfg.min_area:
            continue
        ys, xs = sl
        area = float(areas[comp])
        total = float(sums[comp - 1])
        box = BoxPrompt(x0=xs.start, y0=ys.start, x1=xs.stop, y1=ys.stop,
                        confidence=float(np.clip(total / area, 0.0, 1.0)))
        cands.append([box, total, area])

    for _ in range(_MAX_MERGE_ROUNDS):
        if not _merge_round(cands, cfg.merge_iou):
            break
    boxes = [c[0] for c in cands]
    boxes.sort(key=lambda b: (-b.confidence, b.y0, b.x0))
    return boxes


def _merge_round(cands, merge_iou) -> bool:
    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            a, b = cands[i][0], cands[j][0]
            if box_iou(a, b) > merge_iou:
                total = cands[i][1] + cands[j][1]
                area = cands[i][2] + cands[j][2]
                joint = BoxPrompt(
                    x0=min(a.x0, b.x0), y0=min(a.y0, b.y0),
                    x1=max(a.x1, b.x1), y1=max(a.y1, b.y1),
                    confidence=float(np.clip(total / area, 0.0, 1.0)),
                )
                del cands[j]
                del cands[i]
                cands.append([joint, total, area])
                return True
    return False


# --- prompt JSON round trip ---

def write_prompts(boxes, width: int, height: int, path) -> None:
    doc = {
        "width": int(width),
        "height": int(height),
        "boxes": [
            {"x0": b.x0, "y0": b.y0, "x1": b.x1, "y1": b.y1,
             "confidence": b.confidence}
            for b in boxes
        ],
    }
    with open(path, "w") as fp:
        json.dump(doc, fp, indent=2, sort_keys=True)
        fp.write("\n")


def read_prompts(path) -> tuple[list[BoxPrompt], int, int]:
    """Read a prompt JSON file, enforcing coordinate and confidence bounds.

    Returns ``(boxes, width, height)``.
    """
    with open(path) as fp:
        try:
            doc = json.load(fp)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    try:
        width, height = int(doc["width"]), int(doc["height"])
        raw = doc["boxes"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: missing width/height/boxes") from exc
    if width < 1 or height < 1:
        raise ValidationError(f"{path}: degenerate image dimensions")
    boxes = []
    for i, entry in enumerate(raw):
        try:
            box = BoxPrompt(x0=int(entry["x0"]), y0=int(entry["y0"]),
                            x1=int(entry["x1"]), y1=int(entry["y1"]),
                            confidence=float(entry["confidence"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{path}: malformed box {i}") from exc
        boxes.append(box.check_within(width, height))
    return boxes, width, height
