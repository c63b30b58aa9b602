"""Command-line interface for the score-to-mask toolkit."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import bench, io as s2m_io, metrics, prompts, scoring, segmenter, synth
from .bench import PipelineConfig
from .metrics import SweepConfig
from .prompts import NoiseSpec, PromptGenConfig
from .segmenter import SegmenterConfig
from .validation import ValidationError


@click.group()
def main():
    """Score-to-mask toolkit: anomaly score maps to OoD object masks."""


def _fail(exc):
    raise click.ClickException(str(exc))


@main.command()
@click.option("--logits", required=True, type=click.Path(exists=True),
              help="CxHxW float32 logit stack (.npy)")
@click.option("--method", type=click.Choice(["entropy", "energy"]),
              default="entropy", show_default=True)
@click.option("--temperature", type=float, default=1.0, show_default=True)
@click.option("--literal-energy", is_flag=True,
              help="use the no-log energy form")
@click.option("--scale", type=float, default=None,
              help="amplification factor applied to the scores")
@click.option("--out", required=True, type=click.Path())
def score(logits, method, temperature, literal_energy, scale, out):
    """Compute a per-pixel anomaly score map from exported logits."""
    try:
        stack = s2m_io.read_logits(logits)
        if method == "entropy":
            values = scoring.entropy_score(stack)
        else:
            values = scoring.energy_score(stack, temperature,
                                          literal_form=literal_energy)
        if scale is not None:
            values = scoring.scale_scores(values, scale)
        s2m_io.write_scoremap(values, out)
    except (ValidationError, OSError) as exc:
        _fail(exc)


@main.command("synth")
@click.option("--inlier-dir", required=True, type=click.Path(exists=True))
@click.option("--object-dir", required=True, type=click.Path(exists=True),
              help="directory of <stem>_img.png / <stem>_mask.png pairs")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--objects-per-image", type=int, default=1, show_default=True)
@click.option("--scale-min", type=float, default=0.5, show_default=True)
@click.option("--scale-max", type=float, default=2.0, show_default=True)
def synth_cmd(inlier_dir, object_dir, out_dir, count, seed,
              objects_per_image, scale_min, scale_max):
    """Synthesize an outlier-exposure dataset by pasting objects into
    inlier images; emits img_%06d.png, gt_%06d.png and boxes_%06d.json."""
    try:
        inliers = sorted(Path(inlier_dir).glob("*.png"))
        if not inliers:
            raise ValidationError(f"no inlier PNGs in {inlier_dir}")
        objects = []
        for mask_path in sorted(Path(object_dir).glob("*_mask.png")):
            img_path = mask_path.with_name(
                mask_path.name.replace("_mask.png", "_img.png"))
            if not img_path.exists():
                raise ValidationError(f"missing crop for {mask_path}")
            objects.append(synth.OutlierObject(
                crop=s2m_io.read_image(img_path),
                mask=s2m_io.read_binary_mask(mask_path)))
        if not objects:
            raise ValidationError(f"no *_mask.png objects in {object_dir}")
        cfg = synth.SynthConfig(objects_per_image=objects_per_image,
                                scale_min=scale_min, scale_max=scale_max,
                                seed=seed)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            inlier = s2m_io.read_image(inliers[i % len(inliers)])
            composite, mask, boxes = synth.synthesize_one(inlier, objects, cfg, i)
            s2m_io.write_image(composite, out / f"img_{i:06d}.png")
            s2m_io.write_labelmask(mask, out / f"gt_{i:06d}.png")
            h, w = mask.shape
            prompts.write_prompts(boxes, w, h, out / f"boxes_{i:06d}.json")
    except (ValidationError, OSError) as exc:
        _fail(exc)


@main.command("prompts")
@click.option("--scores", required=True, type=click.Path(exists=True))
@click.option("--quantile", type=float, default=0.95, show_default=True)
@click.option("--min-area", type=int, default=16, show_default=True)
@click.option("--merge-iou", type=float, default=0.5, show_default=True)
@click.option("--connectivity", type=click.Choice(["4", "8"]), default="8",
              show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True,
              help="multiplicative score fluctuation amplitude")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def prompts_cmd(scores, quantile, min_area, merge_iou, connectivity,
                noise, seed, out):
    """Generate box prompts from an anomaly score map."""
    try:
        arr = s2m_io.read_scoremap(scores)
        if noise > 0:
            arr = prompts.perturb_scores(arr, NoiseSpec(amplitude=noise,
                                                        seed=seed))
        cfg = PromptGenConfig(quantile=quantile, min_area=min_area,
                              merge_iou=merge_iou,
                              connectivity=int(connectivity))
        boxes = prompts.generate_prompts(arr, cfg)
        h, w = arr.shape
        prompts.write_prompts(boxes, w, h, out)
        click.echo(f"{len(boxes)} prompt(s) written to {out}")
    except (ValidationError, OSError) as exc:
        _fail(exc)


@main.command()
@click.option("--scores", required=True, type=click.Path(exists=True))
@click.option("--boxes", type=click.Path(exists=True),
              help="prompt JSON (omit when using --external-masks)")
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--margin", type=float, default=0.1, show_default=True)
@click.option("--external-masks", type=click.Path(exists=True),
              help="directory of externally produced mask PNGs")
@click.option("--confidences", type=click.Path(exists=True),
              help="sidecar confidence JSON for --external-masks")
@click.option("--out", required=True, type=click.Path())
@click.option("--mask-out", type=click.Path(),
              help="also write the threshold-free binary mask PNG")
def segment(scores, boxes, alpha, margin, external_masks, confidences,
            out, mask_out):
    """Segment per prompt and fuse into a confidence map."""
    try:
        arr = s2m_io.read_scoremap(scores)
        h, w = arr.shape
        if external_masks:
            if not confidences:
                raise ValidationError("--external-masks requires --confidences")
            masks = segmenter.read_masks(
                sorted(Path(external_masks).glob("*.png")), confidences)
        else:
            if not boxes:
                raise ValidationError("either --boxes or --external-masks is required")
            box_list, bw, bh = prompts.read_prompts(boxes)
            if (bw, bh) != (w, h):
                raise ValidationError(
                    f"prompt frame {bw}x{bh} does not match score map {w}x{h}")
            cfg = SegmenterConfig(alpha=alpha, margin=margin)
            masks = [segmenter.segment_with_box(arr, b, cfg) for b in box_list]
        fused = segmenter.fuse_masks(masks, w, h)
        s2m_io.write_scoremap(fused, out)
        if mask_out:
            s2m_io.write_binary_mask(segmenter.binarize_confidence(fused),
                                     mask_out)
    except (ValidationError, OSError) as exc:
        _fail(exc)


@main.command("eval")
@click.option("--pred-dir", required=True, type=click.Path(exists=True),
              help="predicted score/confidence maps (.npy)")
@click.option("--gt-dir", required=True, type=click.Path(exists=True))
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--range", "range_mode",
              type=click.Choice(["dataset", "image", "unit"]),
              default="dataset", show_default=True)
@click.option("--agg", type=click.Choice(["pool", "mean"]), default="pool",
              show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path())
@click.option("--curves", "curves_dir", type=click.Path())
def eval_cmd(pred_dir, gt_dir, steps, range_mode, agg, report_path,
             csv_path, curves_dir):
    """Evaluate predicted maps against ternary ground-truth masks."""
    try:
        pairs = bench._pair_inputs(pred_dir, gt_dir)
        cfg = SweepConfig(steps=steps, range_mode=range_mode)
        maps = [s2m_io.read_scoremap(p) for _, p, _ in pairs]
        gts = [s2m_io.read_labelmask(g) for _, _, g in pairs]
        score_range = None
        if range_mode == "dataset":
            score_range = (min(float(m.min()) for m in maps),
                           max(float(m.max()) for m in maps))
        reports = [
            metrics.evaluate_image(m, g, cfg, score_range=score_range,
                                   name=stem)
            for (stem, _, _), m, g in zip(pairs, maps, gts)
        ]
        report = metrics.aggregate(reports, mode=agg, cfg=cfg)
        bench.write_report(report, report_path)
        if csv_path:
            _write_per_image_csv(report, csv_path)
        if curves_dir:
            bench.emit_curves(report, curves_dir, scores=maps, gts=gts)
        click.echo(json.dumps(
            {k: report.to_dict()[k]
             for k in ("best_iou", "auiou", "mean_f1", "auprc", "fpr95")}))
    except (ValidationError, OSError) as exc:
        _fail(exc)


def _write_per_image_csv(report, path):
    rows = report.per_image
    fields = ["name", "best_iou", "best_threshold", "auiou", "mean_f1",
              "auprc", "fpr95", "threshold_free_iou", "zero_prompt"]
    with open(path, "w", newline="") as fp:
        writer = csv.DictWriter(fp, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def _load_pipeline_config(path) -> PipelineConfig:
    with open(path, "rb") as fp:
        doc = tomllib.load(fp)
    noise = float(doc.get("noise", 0.0))
    seed = int(doc.get("seed", 0))
    return PipelineConfig(
        prompt=PromptGenConfig(
            quantile=float(doc.get("quantile", 0.95)),
            min_area=int(doc.get("min_area", 16)),
            merge_iou=float(doc.get("merge_iou", 0.5)),
            connectivity=int(doc.get("connectivity", 8))),
        segment=SegmenterConfig(alpha=float(doc.get("alpha", 0.5)),
                                margin=float(doc.get("margin", 0.1))),
        noise=NoiseSpec(amplitude=noise, seed=seed) if noise > 0 else None,
        sweep=SweepConfig(steps=int(doc.get("steps", 100)),
                          range_mode=doc.get("range", "unit")),
        source=doc.get("source", "reference"),
        seed=seed,
    )


@main.command()
@click.option("--scores-dir", required=True, type=click.Path(exists=True))
@click.option("--gt-dir", required=True, type=click.Path(exists=True))
@click.option("--boxes-dir", type=click.Path(exists=True))
@click.option("--masks-dir", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="flat TOML mirroring the pipeline config fields")
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--viz-dir", type=click.Path())
@click.option("--curves-dir", type=click.Path())
def pipeline(scores_dir, gt_dir, boxes_dir, masks_dir, config_path,
             report_path, manifest_path, viz_dir, curves_dir):
    """Run the full pipeline over a dataset directory.

    Inputs pair by file stem after stripping role prefixes, e.g.
    img_000123.npy with gt_000123.png."""
    try:
        cfg = _load_pipeline_config(config_path) if config_path \
            else PipelineConfig()
        if boxes_dir and cfg.source == "reference":
            cfg = PipelineConfig(prompt=cfg.prompt, segment=cfg.segment,
                                 noise=cfg.noise, sweep=cfg.sweep,
                                 source="external-prompts", seed=cfg.seed)
        if masks_dir and cfg.source == "reference":
            cfg = PipelineConfig(prompt=cfg.prompt, segment=cfg.segment,
                                 noise=cfg.noise, sweep=cfg.sweep,
                                 source="external-masks", seed=cfg.seed)
        report, manifest = bench.run_pipeline(
            scores_dir, gt_dir, cfg, boxes_dir=boxes_dir, masks_dir=masks_dir)
        bench.write_report(report, report_path)
        bench.write_manifest(manifest, manifest_path)
        if viz_dir:
            out = Path(viz_dir)
            out.mkdir(parents=True, exist_ok=True)
            for stem, score_path, _ in bench._pair_inputs(scores_dir, gt_dir):
                bench.render_visualization(s2m_io.read_scoremap(score_path),
                                           out / f"{stem}.png")
        if curves_dir:
            bench.emit_curves(report, curves_dir)
        click.echo(json.dumps({
            "n_images": report.n_images,
            "best_iou": report.best_iou,
            "threshold_free_iou_mean": float(np.mean(
                [r.get("threshold_free_iou", 0.0) for r in report.per_image])),
            "zero_prompt_images": sum(
                1 for e in manifest.entries if e["zero_prompt"]),
        }))
    except (ValidationError, OSError) as exc:
        _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
