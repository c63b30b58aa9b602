"""End-to-end harness: scores -> prompts -> masks -> fused map -> metrics.

Inputs are paired by file stem after stripping a role prefix, so
``img_000123.npy`` matches ``gt_000123.png``.  Timings go into a run
manifest kept separate from the metric report, which therefore stays
byte-reproducible for a fixed seed and config.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__, io as s2m_io, metrics, prompts, segmenter
from .metrics import SweepConfig
from .prompts import NoiseSpec, PromptGenConfig
from .segmenter import SegmenterConfig
from .validation import ValidationError, check_score_map

_STEM_PREFIXES = ("img_", "gt_", "scores_", "score_", "boxes_", "mask_",
                  "masks_", "conf_", "pred_")

SOURCES = ("reference", "external-prompts", "external-masks")


def canonical_stem(path) -> str:
    stem = Path(path).stem
    for prefix in _STEM_PREFIXES:
        if stem.startswith(prefix):
            return stem[len(prefix):]
    return stem


@dataclass(frozen=True)
class PipelineConfig:
    prompt: PromptGenConfig = PromptGenConfig()
    segment: SegmenterConfig = SegmenterConfig()
    noise: NoiseSpec | None = None
    sweep: SweepConfig = SweepConfig(range_mode="unit")
    source: str = "reference"
    seed: int = 0

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValidationError(f"source must be one of {SOURCES}")

    def to_dict(self) -> dict:
        return {
            "prompt": vars(self.prompt).copy(),
            "segment": vars(self.segment).copy(),
            "noise": vars(self.noise).copy() if self.noise else None,
            "sweep": {"steps": self.sweep.steps,
                      "range": self.sweep.range_mode},
            "source": self.source,
            "seed": self.seed,
        }


@dataclass
class RunManifest:
    config: dict
    seed: int
    version: str = __version__
    entries: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "images": self.entries,
        }


def _image_noise_seed(seed: int, stem: str) -> int:
    # per-image stream from (seed, stem): parallel order cannot change output
    return int(np.random.SeedSequence(
        [seed, zlib.crc32(stem.encode())]).generate_state(1)[0])


def _pair_inputs(scores_dir, gt_dir):
    scores = {canonical_stem(p): p for p in sorted(Path(scores_dir).glob("*.npy"))}
    gts = {}
    for pattern in ("*.png", "*.pgm"):
        for p in sorted(Path(gt_dir).glob(pattern)):
            gts.setdefault(canonical_stem(p), p)
    if not scores:
        raise ValidationError(f"no inputs: no .npy score maps in {scores_dir}")
    missing = sorted(set(scores) - set(gts)) + sorted(set(gts) - set(scores))
    if missing:
        raise ValidationError(f"unmatched stems: {', '.join(missing[:5])}")
    return [(stem, scores[stem], gts[stem]) for stem in sorted(scores)]


def process_image(score_map, cfg: PipelineConfig, stem: str = "",
                  boxes=None, masks=None):
    """One image through the pipeline; returns (confidence map, n_prompts, stage times)."""
    arr = check_score_map(score_map)
    h, w = arr.shape
    times = {}

    t0 = time.perf_counter()
    if cfg.noise is not None and cfg.noise.amplitude > 0:
        arr = prompts.perturb_scores(
            arr, NoiseSpec(amplitude=cfg.noise.amplitude,
                           seed=_image_noise_seed(cfg.noise.seed, stem)))
    times["noise_ms"] = (time.perf_counter() - t0) * 1e3

    if masks is not None:
        n_prompts = len(masks)
        times["prompt_ms"] = 0.0
        times["segment_ms"] = 0.0
        prompt_masks = masks
    else:
        t0 = time.perf_counter()
        if boxes is None:
            boxes = prompts.generate_prompts(arr, cfg.prompt)
        times["prompt_ms"] = (time.perf_counter() - t0) * 1e3
        n_prompts = len(boxes)
        t0 = time.perf_counter()
        prompt_masks = [segmenter.segment_with_box(arr, b, cfg.segment)
                        for b in boxes]
        times["segment_ms"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    fused = segmenter.fuse_masks(prompt_masks, w, h)
    times["fuse_ms"] = (time.perf_counter() - t0) * 1e3
    return fused, n_prompts, times


def run_pipeline(scores_dir, gt_dir, cfg: PipelineConfig = PipelineConfig(),
                 boxes_dir=None, masks_dir=None):
    """Run the full pipeline over a dataset directory.

    Returns ``(MetricReport, RunManifest)``.  Zero-prompt images produce
    all-zero confidence maps, contribute IoU 0, and are flagged in both
    the report and the manifest, never dropped.
    """
    pairs = _pair_inputs(scores_dir, gt_dir)
    manifest = RunManifest(config=cfg.to_dict(), seed=cfg.seed)
    reports = []
    for stem, score_path, gt_path in pairs:
        try:
            arr = s2m_io.read_scoremap(score_path)
            gt = s2m_io.read_labelmask(gt_path)
            boxes = masks = None
            if cfg.source == "external-prompts":
                box_path = Path(boxes_dir) / f"boxes_{stem}.json"
                if not box_path.exists():
                    box_path = Path(boxes_dir) / f"{stem}.json"
                boxes, _, _ = prompts.read_prompts(box_path)
            elif cfg.source == "external-masks":
                mask_dir = Path(masks_dir) / stem
                masks = segmenter.read_masks(
                    sorted(mask_dir.glob("mask_*.png")),
                    mask_dir / "confidences.json")

            t_total = time.perf_counter()
            fused, n_prompts, times = process_image(
                arr, cfg, stem=stem, boxes=boxes, masks=masks)
            t0 = time.perf_counter()
            report = metrics.evaluate_image(fused, gt, cfg.sweep, name=stem)
            report.threshold_free_iou = metrics.binary_iou(
                segmenter.binarize_confidence(fused), gt)
            report.zero_prompt = n_prompts == 0
            times["metrics_ms"] = (time.perf_counter() - t0) * 1e3
            times["total_ms"] = (time.perf_counter() - t_total) * 1e3
        except (ValidationError, OSError) as exc:
            raise ValidationError(f"{stem}: {exc}") from exc
        reports.append(report)
        manifest.entries.append({
            "stem": stem,
            "n_prompts": n_prompts,
            "zero_prompt": n_prompts == 0,
            "timing": times,
        })
    return metrics.aggregate(reports, mode="pool", cfg=cfg.sweep), manifest


def render_visualization(values, path) -> None:
    """Write a min-max normalized 8-bit grayscale PNG (round-half-up)."""
    arr = check_score_map(values)
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        gray = np.zeros(arr.shape, dtype=np.uint8)
    else:
        gray = np.floor((arr - lo) / (hi - lo) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path)


def emit_curves(report: metrics.MetricReport, out_dir, scores=None,
                gts=None, bins: int = 100) -> None:
    """Write the sweep curves and, when pixels are supplied, a score
    histogram split by ground-truth class.

    ``sweep_curve.csv`` holds ``t,t_real,iou,f1`` rows; the histogram has
    uniform bins over the pooled score range with per-class counts.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ts = report.thresholds
    ts_real = report.thresholds_real
    with open(out / "sweep_curve.csv", "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["t", "t_real", "iou", "f1"])
        for k in range(len(report.iou_curve)):
            t = ts[k] if ts is not None else k / report.steps
            t_real = ts_real[k] if ts_real is not None else ""
            writer.writerow([f"{t:.6g}", f"{t_real:.9g}" if t_real != "" else "",
                             f"{report.iou_curve[k]:.9g}",
                             f"{report.f1_curve[k]:.9g}"])
    if scores is None or gts is None:
        return
    pooled, pos = [], []
    for arr, gt in zip(scores, gts):
        s, p = metrics._masked(arr, gt)
        pooled.append(s)
        pos.append(p)
    pooled = np.concatenate(pooled)
    pos = np.concatenate(pos)
    lo, hi = float(pooled.min()), float(pooled.max())
    edges = np.linspace(lo, hi if hi > lo else lo + 1.0, bins + 1)
    id_counts, _ = np.histogram(pooled[~pos], bins=edges)
    ood_counts, _ = np.histogram(pooled[pos], bins=edges)
    with open(out / "score_histogram.csv", "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["bin_low", "bin_high", "id_count", "ood_count"])
        for k in range(bins):
            writer.writerow([f"{edges[k]:.9g}", f"{edges[k + 1]:.9g}",
                             int(id_counts[k]), int(ood_counts[k])])


def time_run(manifest: RunManifest) -> dict:
    """Per-image wall-clock statistics over the pipeline stages."""
    if not manifest.entries:
        raise ValidationError("empty manifest")
    stages = ("noise_ms", "prompt_ms", "segment_ms", "fuse_ms",
              "metrics_ms", "total_ms")
    summary = {}
    for stage in stages:
        vals = [e["timing"][stage] for e in manifest.entries]
        summary[stage] = {
            "mean": statistics.fmean(vals),
            "median": statistics.median(vals),
        }
    return summary


def write_report(report: metrics.MetricReport, path) -> None:
    with open(path, "w") as fp:
        json.dump(report.to_dict(), fp, indent=2, sort_keys=True)
        fp.write("\n")


def write_manifest(manifest: RunManifest, path) -> None:
    with open(path, "w") as fp:
        json.dump(manifest.to_dict(), fp, indent=2, sort_keys=True)
        fp.write("\n")
