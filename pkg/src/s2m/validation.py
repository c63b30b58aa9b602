"""Input validation helpers for the raster types used across the toolkit.

Conventions used everywhere: rasters are row-major with the origin at the
top-left corner and y increasing downward.  Score maps are real-valued 2D
arrays, label masks are uint8 with codes {0 = in-distribution,
1 = out-of-distribution, 255 = ignore}, confidence maps are floats in
[0, 1] where 0 means in-distribution.
"""

from __future__ import annotations

import numpy as np

ID_LABEL = 0
OOD_LABEL = 1
IGNORE_LABEL = 255

VALID_LABELS = (ID_LABEL, OOD_LABEL, IGNORE_LABEL)


class ValidationError(ValueError):
    """Raised when an input raster or prompt violates its contract."""


def check_score_map(values, name: str = "score map") -> np.ndarray:
    """Validate a 2D map of finite real anomaly scores.

    Returns a float64 C-contiguous view/copy; all metric arithmetic is done
    in 64-bit regardless of the 32-bit on-disk payload.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be at least 1x1, got {arr.shape}")
    finite = np.isfinite(arr)
    if not finite.all():
        idx = int(np.flatnonzero(~finite.ravel())[0])
        raise ValidationError(f"non-finite value at index {idx} in {name}")
    return np.ascontiguousarray(arr)


def check_label_mask(values, name: str = "label mask") -> np.ndarray:
    """Validate a 2D ternary ground-truth mask with codes {0, 1, 255}."""
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be at least 1x1, got {arr.shape}")
    arr = arr.astype(np.uint8, casting="safe") if arr.dtype != np.uint8 else arr
    bad = ~np.isin(arr, VALID_LABELS)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise ValidationError(
            f"label value {int(arr.ravel()[idx])} not in {{0,1,255}} "
            f"at index {idx} in {name}"
        )
    return np.ascontiguousarray(arr)


def check_binary_mask(values, name: str = "binary mask") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.dtype != bool:
        if not np.isin(arr, (0, 1)).all():
            raise ValidationError(f"{name} contains non-binary values")
        arr = arr.astype(bool)
    return np.ascontiguousarray(arr)


def check_rgb_image(values, name: str = "image") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"{name} must be HxWx3, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be at least 1x1")
    if arr.dtype != np.uint8:
        raise ValidationError(f"{name} must be 8-bit, got dtype {arr.dtype}")
    return np.ascontiguousarray(arr)


def check_logit_stack(values, name: str = "logits") -> np.ndarray:
    """Validate a class-major CxHxW stack of finite logits, C >= 2."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 3:
        raise ValidationError(f"{name} must be CxHxW, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValidationError(f"{name} needs at least 2 classes, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"non-finite value in {name}")
    return np.ascontiguousarray(arr)


def check_confidence_map(values, name: str = "confidence map") -> np.ndarray:
    arr = check_score_map(values, name)
    if (arr < 0).any() or (arr > 1).any():
        raise ValidationError(f"{name} values must lie in [0, 1]")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "rasters") -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValidationError(
            f"dimension mismatch between {what}: {a.shape[:2]} vs {b.shape[:2]}"
        )
