"""Bit-exact raster file IO.

Score maps and logit stacks live on disk as a strict NPY v1.0 subset:
little-endian IEEE-754 32-bit floats, C order, shape (H, W) or (C, H, W),
never pickled objects.  Label and binary masks are 8-bit single-channel
PNG or PGM (P5); images are 8-bit RGB PNG.
"""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np
from numpy.lib import format as npy_format
from PIL import Image

from .validation import (
    ValidationError,
    check_binary_mask,
    check_label_mask,
    check_logit_stack,
    check_rgb_image,
)

_F4 = np.dtype("<f4")


def _read_npy_f4(path, expect_ndim: int) -> np.ndarray:
    with open(path, "rb") as fp:
        try:
            version = npy_format.read_magic(fp)
        except ValueError as exc:
            raise ValidationError(f"{path}: malformed NPY header ({exc})") from exc
        if version != (1, 0):
            raise ValidationError(f"{path}: unsupported NPY version {version}")
        try:
            shape, fortran_order, dtype = npy_format.read_array_header_1_0(fp)
        except ValueError as exc:
            raise ValidationError(f"{path}: malformed NPY header ({exc})") from exc
        if dtype != _F4:
            raise ValidationError(
                f"{path}: dtype {dtype} outside the <f4 subset contract"
            )
        if fortran_order:
            raise ValidationError(f"{path}: Fortran-order payloads are not supported")
        if len(shape) != expect_ndim:
            raise ValidationError(
                f"{path}: expected {expect_ndim}D payload, got shape {shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        data = np.fromfile(fp, dtype=_F4, count=count)
        if data.size != count:
            raise ValidationError(f"{path}: truncated payload")
    return data.reshape(shape)


def _write_npy_f4(arr: np.ndarray, path) -> None:
    payload = np.ascontiguousarray(arr, dtype=_F4)
    with open(path, "wb") as fp:
        npy_format.write_array_header_1_0(
            fp,
            {"descr": "<f4", "fortran_order": False, "shape": payload.shape},
        )
        payload.tofile(fp)


def read_scoremap(path) -> np.ndarray:
    """Read an HxW float32 score map; rejects non-finite payloads."""
    arr = _read_npy_f4(path, expect_ndim=2)
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{path}: degenerate dimensions {arr.shape}")
    finite = np.isfinite(arr)
    if not finite.all():
        idx = int(np.flatnonzero(~finite.ravel())[0])
        raise ValidationError(f"{path}: non-finite value at index {idx}")
    return arr


def write_scoremap(values, path) -> None:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValidationError(f"score map must be 2D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("refusing to write non-finite score map")
    _write_npy_f4(arr, path)


def read_logits(path) -> np.ndarray:
    """Read a CxHxW float32 logit stack."""
    arr = _read_npy_f4(path, expect_ndim=3)
    return check_logit_stack(arr, name=str(path)).astype(np.float32)


def write_logits(values, path) -> None:
    arr = check_logit_stack(values)
    _write_npy_f4(arr, path)


# --- 8-bit masks and images (PNG / PGM) ---

_PGM_HEADER = re.compile(rb"^P5\s+(?:#.*\s+)*(\d+)\s+(\d+)\s+(\d+)\s")


def _read_gray8(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        blob = path.read_bytes()
        m = _PGM_HEADER.match(blob)
        if not m:
            raise ValidationError(f"{path}: malformed PGM header")
        w, h, maxval = (int(g) for g in m.groups())
        if maxval != 255:
            raise ValidationError(f"{path}: only maxval 255 PGM supported")
        data = np.frombuffer(blob[m.end():], dtype=np.uint8, count=-1)
        if data.size < w * h:
            raise ValidationError(f"{path}: truncated PGM payload")
        return data[: w * h].reshape(h, w).copy()
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValidationError(f"{path}: expected single-channel image, got {img.mode}")
        return np.asarray(img, dtype=np.uint8)


def _write_gray8(arr: np.ndarray, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode()
        path.write_bytes(header + arr.astype(np.uint8).tobytes())
    else:
        Image.fromarray(arr.astype(np.uint8), mode="L").save(path)


def read_labelmask(path) -> np.ndarray:
    return check_label_mask(_read_gray8(path), name=str(path))


def write_labelmask(values, path) -> None:
    _write_gray8(check_label_mask(values), path)


def read_binary_mask(path) -> np.ndarray:
    arr = _read_gray8(path)
    if not np.isin(arr, (0, 1, 255)).all():
        raise ValidationError(f"{path}: binary mask contains values outside {{0, 255}}")
    return arr > 0


def write_binary_mask(values, path) -> None:
    arr = check_binary_mask(values)
    _write_gray8(arr.astype(np.uint8) * 255, path)


def read_image(path) -> np.ndarray:
    with Image.open(path) as img:
        return check_rgb_image(np.asarray(img.convert("RGB"), dtype=np.uint8),
                               name=str(path))


def write_image(values, path) -> None:
    Image.fromarray(check_rgb_image(values), mode="RGB").save(path)


def require_writable(path) -> None:
    parent = os.path.dirname(os.fspath(path)) or "."
    if not os.access(parent, os.W_OK):
        raise OSError(f"destination {path} is not writable")
