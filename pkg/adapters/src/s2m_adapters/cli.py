"""Command-line entry points mirroring the toolkit's directory conventions."""

from __future__ import annotations

from pathlib import Path

import click

from . import AdapterError
from .curate import curate_objects
from .export import convert_boxes, export_masks, export_scores
from .models import ExportJob, available_models


@click.group()
def main():
    """Bridge external models into the s2m file contracts."""


@main.command("export-scores")
@click.option("--model", required=True,
              help=f"model name ({', '.join(available_models())})")
@click.option("--image-dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--device", default="cpu", show_default=True)
def export_scores_cmd(model, image_dir, out_dir, device):
    """Write one NPY score map per image in --image-dir."""
    images = sorted(p for p in image_dir.iterdir()
                    if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    job = ExportJob(model=model, images=images, out_dir=out_dir, device=device)
    try:
        written = export_scores(job)
    except AdapterError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {len(written)} score maps to {out_dir}")


@main.command("export-masks")
@click.option("--image", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--boxes", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def export_masks_cmd(image, boxes, out_dir):
    """Segment box prompts into mask PNGs plus a confidence sidecar."""
    try:
        mask_paths, sidecar = export_masks(image, boxes, out_dir)
    except AdapterError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {len(mask_paths)} masks and {sidecar.name} to {out_dir}")


@main.command("export-boxes")
@click.option("--detections", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--width", required=True, type=int)
@click.option("--height", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def export_boxes_cmd(detections, width, height, out_path):
    """Convert a detector's bbox dump into prompt JSON."""
    try:
        n = convert_boxes(detections, width, height, out_path)
    except AdapterError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {n} boxes to {out_path}")


@main.command("curate-objects")
@click.option("--annotations", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--exclude", multiple=True,
              help="category to drop; repeatable")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def curate_objects_cmd(annotations, exclude, out_dir):
    """Extract crop+mask object pairs for the synthesizer."""
    try:
        stems = curate_objects(annotations, exclude, out_dir)
    except AdapterError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"curated {len(stems)} objects to {out_dir}")
