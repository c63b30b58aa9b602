"""Writers for the toolkit's on-disk contracts.

Score maps are a strict NPY v1.0 subset (<f4, C order, no pickle);
masks are 8-bit single-channel PNG with values 0/255; images are 8-bit
RGB PNG.  These writers are intentionally self-contained so the adapter
component shares no code with the toolkit it feeds.
"""

from __future__ import annotations

import numpy as np
from numpy.lib import format as npy_format
from PIL import Image

from . import AdapterError

_F4 = np.dtype("<f4")


def write_scoremap(values, path) -> None:
    arr = np.ascontiguousarray(values, dtype=_F4)
    if arr.ndim != 2 or min(arr.shape) < 1:
        raise AdapterError(f"score map must be HxW, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise AdapterError("refusing to export non-finite scores")
    with open(path, "wb") as fp:
        npy_format.write_array_header_1_0(
            fp,
            {"descr": "<f4", "fortran_order": False, "shape": arr.shape},
        )
        arr.tofile(fp)


def write_binary_mask(mask, path) -> None:
    arr = np.asarray(mask)
    if arr.dtype != bool or arr.ndim != 2:
        raise AdapterError(f"mask must be 2D bool, got {arr.dtype} {arr.shape}")
    Image.fromarray(arr.astype(np.uint8) * 255, mode="L").save(path)


def write_image(values, path) -> None:
    arr = np.asarray(values)
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise AdapterError(f"image must be HxWx3 uint8, got {arr.dtype} {arr.shape}")
    Image.fromarray(arr, mode="RGB").save(path)


def read_image(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def read_mask(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8) > 0
