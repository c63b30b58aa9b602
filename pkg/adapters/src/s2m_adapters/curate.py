"""Curate outlier object crops from an annotation manifest.

The manifest is a JSON document::

    {"annotations": [
        {"id": 17, "image": "imgs/a.png", "category": "dog",
         "mask": "masks/a_17.png"},
        ...
    ]}

Paths are resolved relative to the manifest file.  Each kept annotation
becomes a `<category>_<id>_img.png` / `<category>_<id>_mask.png` pair:
the object's mask bounding box cropped from the source image, ready for
the synthesizer's object directory convention.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import AdapterError
from . import contracts


def _load_manifest(manifest_path):
    path = Path(manifest_path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise AdapterError(f"cannot read annotations {path}: {exc}") from exc
    if "annotations" not in doc:
        raise AdapterError(f"{path}: manifest has no 'annotations' key")
    return path.parent, doc["annotations"]


def curate_objects(manifest_path, exclusions, out_dir) -> list:
    """Extract crop+mask pairs, skipping excluded categories and empty masks.

    Returns the stems that were written, in manifest order.
    """
    base, annotations = _load_manifest(manifest_path)
    excluded = {c.lower() for c in exclusions}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stems = []
    for ann in annotations:
        if ann["category"].lower() in excluded:
            continue
        mask = contracts.read_mask(base / ann["mask"])
        if not mask.any():
            continue
        image = contracts.read_image(base / ann["image"])
        if mask.shape != image.shape[:2]:
            raise AdapterError(
                f"annotation {ann['id']}: mask {mask.shape} does not match "
                f"image {image.shape[:2]}"
            )
        ys, xs = np.nonzero(mask)
        y0, y1 = ys.min(), ys.max() + 1
        x0, x1 = xs.min(), xs.max() + 1
        stem = f"{ann['category']}_{int(ann['id']):04d}"
        contracts.write_image(image[y0:y1, x0:x1], out_dir / f"{stem}_img.png")
        contracts.write_binary_mask(mask[y0:y1, x0:x1],
                                    out_dir / f"{stem}_mask.png")
        stems.append(stem)
    return stems
