"""Outlier-exposure synthesis: paste outlier objects into inlier images.

A placement is a uniform scale plus an integer translation; pasted pixels
replace the inlier exactly (no blending), so inlier pixels outside the
composite mask are bit-preserved and the contract is directly checkable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import BoxPrompt
from .validation import (
    OOD_LABEL,
    ValidationError,
    check_binary_mask,
    check_label_mask,
    check_rgb_image,
)

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 4:
        return FOUR_CONNECTED
    if connectivity == 8:
        return EIGHT_CONNECTED
    raise ValidationError(f"connectivity must be 4 or 8, got {connectivity}")


@dataclass(frozen=True)
class OutlierObject:
    """An object crop plus its support mask (true = object pixel)."""

    crop: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        crop = check_rgb_image(self.crop, "object crop")
        mask = check_binary_mask(self.mask, "object mask")
        if crop.shape[:2] != mask.shape:
            raise ValidationError(
                f"crop {crop.shape[:2]} and mask {mask.shape} dimensions differ"
            )
        if not mask.any():
            raise ValidationError("object mask has no true pixels")
        object.__setattr__(self, "crop", crop)
        object.__setattr__(self, "mask", mask)


@dataclass(frozen=True)
class PlacementTransform:
    scale: float
    offset_x: int
    offset_y: int

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class SynthConfig:
    objects_per_image: int = 1
    scale_min: float = 0.5
    scale_max: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.objects_per_image < 1:
            raise ValidationError("objects_per_image must be >= 1")
        if not 0 < self.scale_min <= self.scale_max:
            raise ValidationError(
                f"need 0 < scale_min <= scale_max, got "
                f"({self.scale_min}, {self.scale_max})"
            )


def _scaled_size(w: int, h: int, scale: float) -> tuple[int, int]:
    # round-half-up, floor at 1x1
    return (max(1, int(np.floor(w * scale + 0.5))),
            max(1, int(np.floor(h * scale + 0.5))))


def _nn_indices(n_out: int, n_in: int) -> np.ndarray:
    # center-aligned nearest neighbor: out pixel i samples in pixel
    # floor((i + 0.5) * n_in / n_out), clamped
    idx = ((np.arange(n_out) + 0.5) * n_in / n_out).astype(np.int64)
    return np.minimum(idx, n_in - 1)


def scale_mask(mask, scale: float):
    """Nearest-neighbor rescale of a binary mask to round(w*s) x round(h*s)."""
    arr = check_binary_mask(mask)
    if not scale > 0:
        raise ValidationError(f"scale must be positive, got {scale}")
    h, w = arr.shape
    out_w, out_h = _scaled_size(w, h, scale)
    return arr[np.ix_(_nn_indices(out_h, h), _nn_indices(out_w, w))]


def scale_image(image, scale: float):
    """Nearest-neighbor rescale of an RGB crop, matching scale_mask's grid."""
    arr = check_rgb_image(image)
    h, w = arr.shape[:2]
    out_w, out_h = _scaled_size(w, h, scale)
    return arr[np.ix_(_nn_indices(out_h, h), _nn_indices(out_w, w))]


def compose(inlier, objects, transforms):
    """Paste transformed outlier objects into an inlier image.

    Returns ``(composite, mask)`` where the composite equals the inlier
    bit-exactly wherever the mask is 0, and the mask is the union of the
    transformed object supports (values {0, 1}).  Objects are pasted in
    list order; later objects overwrite earlier ones on overlap.
    """
    base = check_rgb_image(inlier).copy()
    h, w = base.shape[:2]
    label = np.zeros((h, w), dtype=np.uint8)
    if len(objects) != len(transforms):
        raise ValidationError("objects and transforms must align")
    for obj, tf in zip(objects, transforms):
        m = scale_mask(obj.mask, tf.scale)
        crop = scale_image(obj.crop, tf.scale)
        oh, ow = m.shape
        x0, y0 = tf.offset_x, tf.offset_y
        if x0 < 0 or y0 < 0 or x0 + ow > w or y0 + oh > h:
            raise ValidationError(
                f"transform places {ow}x{oh} object at ({x0},{y0}) outside "
                f"{w}x{h} frame"
            )
        region = (slice(y0, y0 + oh), slice(x0, x0 + ow))
        base[region][m] = crop[m]
        label[region][m] = OOD_LABEL
    return base, label


def sample_transform(obj: OutlierObject, target_w: int, target_h: int,
                     cfg: SynthConfig, rng: np.random.Generator) -> PlacementTransform:
    """Draw a uniform placement for one object.

    The scale is uniform on [scale_min, scale_max], clamped so the scaled
    object fits the frame; the offset is uniform over all in-frame
    positions.  Deterministic given the generator state.
    """
    h, w = obj.mask.shape
    s_fit = min(target_w / w, target_h / h)
    ow, oh = _scaled_size(w, h, cfg.scale_min)
    if ow > target_w or oh > target_h:
        raise ValidationError(
            f"object {w}x{h} cannot fit {target_w}x{target_h} frame at "
            f"scale_min {cfg.scale_min}"
        )
    scale = float(rng.uniform(cfg.scale_min, cfg.scale_max))
    scale = min(scale, s_fit)
    ow, oh = _scaled_size(w, h, scale)
    # guard against round-up at the fitting boundary
    while ow > target_w or oh > target_h:
        scale *= 0.999
        ow, oh = _scaled_size(w, h, scale)
    off_x = int(rng.integers(0, target_w - ow + 1))
    off_y = int(rng.integers(0, target_h - oh + 1))
    return PlacementTransform(scale=scale, offset_x=off_x, offset_y=off_y)


def boxes_from_mask(mask, connectivity: int = 8) -> list[BoxPrompt]:
    """Minimal bounding box per connected OoD component of a label mask.

    Ignore pixels are never part of a component.  Boxes come back sorted
    by (y0, x0) with confidence 1.0; an empty mask yields an empty list.
    """
    arr = check_label_mask(mask)
    labeled, n = ndimage.label(arr == OOD_LABEL, structure=_structure(connectivity))
    boxes = []
    for sl in ndimage.find_objects(labeled):
        if sl is None:
            continue
        ys, xs = sl
        boxes.append(BoxPrompt(x0=xs.start, y0=ys.start, x1=xs.stop, y1=ys.stop,
                               confidence=1.0))
    boxes.sort(key=lambda b: (b.y0, b.x0))
    return boxes


def image_rng(seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible RNG stream for one image of a dataset."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def synthesize_one(inlier, objects, cfg: SynthConfig, index: int):
    """Compose one outlier-exposure image deterministically from (seed, index).

    Picks ``objects_per_image`` objects (with replacement) from the pool,
    samples a placement for each, and returns (composite, mask, boxes).
    """
    if not objects:
        raise ValidationError("object pool is empty")
    rng = image_rng(cfg.seed, index)
    h, w = np.asarray(inlier).shape[:2]
    chosen = [objects[int(rng.integers(0, len(objects)))]
              for _ in range(cfg.objects_per_image)]
    transforms = [sample_transform(obj, w, h, cfg, rng) for obj in chosen]
    composite, mask = compose(inlier, chosen, transforms)
    return composite, mask, boxes_from_mask(mask)


def random_shape_object(rng: np.random.Generator, max_side: int = 32,
                        min_side: int = 6) -> OutlierObject:
    """A random solid rectangle or ellipse crop, for synthetic fixtures."""
    w = int(rng.integers(min_side, max_side + 1))
    h = int(rng.integers(min_side, max_side + 1))
    color = rng.integers(30, 256, size=3, dtype=np.uint8)
    if rng.integers(0, 2):
        mask = np.ones((h, w), dtype=bool)
    else:
        yy, xx = np.mgrid[0:h, 0:w]
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        mask = ((yy - cy) / max(cy, 0.5)) ** 2 + ((xx - cx) / max(cx, 0.5)) ** 2 <= 1.0
        if not mask.any():
            mask[h // 2, w // 2] = True
    crop = np.zeros((h, w, 3), dtype=np.uint8)
    crop[mask] = color
    return OutlierObject(crop=crop, mask=mask)
