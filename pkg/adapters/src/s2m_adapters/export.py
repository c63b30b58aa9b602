"""Batch exporters: score maps per image, masks + confidences per box set."""

from __future__ import annotations

import json
from pathlib import Path

from . import AdapterError
from . import contracts
from .models import ExportJob, box_fill_segmenter, load_model


def export_scores(job: ExportJob) -> list:
    """Run the job's model over every image and write one score file each.

    Output stems mirror the input stems (`scores_<stem>.npy`), so the
    toolkit's stem pairing lines the files up with ground truth without
    any renaming.  Returns the written paths.
    """
    model = load_model(job.model)
    if not job.images:
        raise AdapterError("export job lists no images")
    job.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for image_path in job.images:
        if not image_path.is_file():
            raise AdapterError(f"input image {image_path} is not readable")
        image = contracts.read_image(image_path)
        scores = model(image)
        if scores.shape != image.shape[:2]:
            raise AdapterError(
                f"model output {scores.shape} does not match "
                f"image {image.shape[:2]} for {image_path}"
            )
        out = job.out_dir / f"scores_{image_path.stem}.npy"
        contracts.write_scoremap(scores, out)
        written.append(out)
    return written


def convert_boxes(detections_path, width, height, out_path) -> int:
    """Convert a detector dump into the toolkit's prompt JSON schema.

    The input is the usual detector export: a JSON list of
    ``{"bbox": [x, y, w, h], "score": s}`` records in pixel units.
    Scores are clamped to [0, 1]; degenerate or out-of-frame boxes are
    rejected rather than silently clipped.  Returns the box count.
    """
    try:
        records = json.loads(Path(detections_path).read_text())
    except (OSError, ValueError) as exc:
        raise AdapterError(f"cannot read detections: {exc}") from exc
    boxes = []
    for rec in records:
        x, y, w, h = (int(round(v)) for v in rec["bbox"])
        if w <= 0 or h <= 0 or x < 0 or y < 0 or \
                x + w > width or y + h > height:
            raise AdapterError(
                f"detection bbox {rec['bbox']} does not fit a "
                f"{width}x{height} frame"
            )
        conf = min(max(float(rec.get("score", 1.0)), 0.0), 1.0)
        boxes.append({"x0": x, "y0": y, "x1": x + w, "y1": y + h,
                      "confidence": conf})
    doc = {"width": int(width), "height": int(height), "boxes": boxes}
    Path(out_path).write_text(json.dumps(doc, indent=2) + "\n")
    return len(boxes)


def export_masks(image_path, boxes_path, out_dir) -> tuple:
    """Segment every box prompt in a JSON file into a binary mask PNG.

    Produces `mask_<i>.png` per box plus an index-aligned
    `confidences.json` sidecar; an empty box list yields no masks and an
    empty (but valid) sidecar.  Returns (mask paths, sidecar path).
    """
    image = contracts.read_image(image_path)
    doc = json.loads(Path(boxes_path).read_text())
    h, w = image.shape[:2]
    if (doc.get("width"), doc.get("height")) != (w, h):
        raise AdapterError(
            f"prompt file is for {doc.get('width')}x{doc.get('height')}, "
            f"image is {w}x{h}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mask_paths, confidences = [], []
    for i, box in enumerate(doc["boxes"]):
        mask = box_fill_segmenter(
            image, (box["x0"], box["y0"], box["x1"], box["y1"]))
        path = out_dir / f"mask_{i:03d}.png"
        contracts.write_binary_mask(mask, path)
        mask_paths.append(path)
        confidences.append(float(box["confidence"]))
    sidecar = out_dir / "confidences.json"
    sidecar.write_text(json.dumps({"confidences": confidences}) + "\n")
    return mask_paths, sidecar
