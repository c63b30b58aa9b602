"""Threshold-sweep evaluation metrics with ignore-label handling.

All metrics exclude pixels labeled 255 (ignore).  The sweep walks a
uniform grid t = k/n for k = 0..n-1, maps each t into the score range via
t_real = t * (S_max - S_min) + S_min, and predicts OoD strictly above
t_real.  AuIoU and mean F1 are the grid means of the IoU and F1 curves;
AuPRC and FPR95 sweep the unique score values instead (ties grouped
atomically), so they depend only on the score ranking.

Conventions: IoU with an empty union is 0; F1 is 0 whenever TP is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import (
    IGNORE_LABEL,
    OOD_LABEL,
    ValidationError,
    check_label_mask,
    check_same_shape,
    check_score_map,
)

RANGE_MODES = ("dataset", "image", "unit")
AGG_MODES = ("pool", "mean")


@dataclass(frozen=True)
class SweepConfig:
    steps: int = 100
    range_mode: str = "dataset"

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")
        if self.range_mode not in RANGE_MODES:
            raise ValidationError(
                f"range_mode must be one of {RANGE_MODES}, got {self.range_mode!r}"
            )


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def iou(self) -> float:
        denom = self.tp + self.fp + self.fn
        return self.tp / denom if denom else 0.0

    def f1(self) -> float:
        if self.tp == 0:
            return 0.0
        precision = self.tp / (self.tp + self.fp)
        recall = self.tp / (self.tp + self.fn)
        return 2.0 * precision * recall / (precision + recall)


@dataclass
class SweepResult:
    thresholds: np.ndarray       # grid fractions t = k/n
    thresholds_real: np.ndarray  # mapped t_real values
    counts: np.ndarray           # steps x 4 integer array (tp, fp, fn, tn)
    iou_curve: np.ndarray
    f1_curve: np.ndarray
    best_iou: float
    best_threshold: float        # t_real achieving the best IoU


def _masked(values, gt):
    arr = check_score_map(values)
    mask = check_label_mask(gt)
    check_same_shape(arr, mask, "scores and ground truth")
    keep = mask != IGNORE_LABEL
    return arr[keep], mask[keep] == OOD_LABEL


def confusion_at(values, gt, t_real: float) -> ConfusionCounts:
    """Pixel confusion counts at one real-valued threshold (strict >)."""
    scores, pos = _masked(values, gt)
    pred = scores > t_real
    return ConfusionCounts(
        tp=int((pred & pos).sum()),
        fp=int((pred & ~pos).sum()),
        fn=int((~pred & pos).sum()),
        tn=int((~pred & ~pos).sum()),
    )


def threshold_map(t: float, s_min: float, s_max: float) -> float:
    """Map a grid fraction in [0, 1] into the score range."""
    if s_max < s_min:
        raise ValidationError(f"invalid range ({s_min}, {s_max})")
    return t * (s_max - s_min) + s_min


def _resolve_range(values, cfg: SweepConfig, score_range):
    if cfg.range_mode == "unit":
        return 0.0, 1.0
    if cfg.range_mode == "image" or score_range is None:
        arr = np.asarray(values, dtype=np.float64)
        return float(arr.min()), float(arr.max())
    return float(score_range[0]), float(score_range[1])


def sweep(values, gt, cfg: SweepConfig = SweepConfig(), score_range=None) -> SweepResult:
    """IoU and F1 curves over the threshold grid.

    ``score_range`` supplies the dataset-level (S_min, S_max) when
    ``cfg.range_mode`` is "dataset"; without it the image's own range is
    used (a dataset of one).
    """
    scores, pos = _masked(values, gt)
    lo, hi = _resolve_range(values, cfg, score_range)
    n = cfg.steps
    ts = np.arange(n, dtype=np.float64) / n
    ts_real = ts * (hi - lo) + lo

    pos_sorted = np.sort(scores[pos])
    neg_sorted = np.sort(scores[~pos])
    n_pos, n_neg = pos_sorted.size, neg_sorted.size
    tp = n_pos - np.searchsorted(pos_sorted, ts_real, side="right")
    fp = n_neg - np.searchsorted(neg_sorted, ts_real, side="right")
    fn = n_pos - tp
    tn = n_neg - fp
    counts = np.stack([tp, fp, fn, tn], axis=1).astype(np.int64)

    iou_curve, f1_curve = curves_from_counts(counts)
    best = int(np.argmax(iou_curve))
    return SweepResult(
        thresholds=ts,
        thresholds_real=ts_real,
        counts=counts,
        iou_curve=iou_curve,
        f1_curve=f1_curve,
        best_iou=float(iou_curve[best]),
        best_threshold=float(ts_real[best]),
    )


def curves_from_counts(counts: np.ndarray):
    """IoU and F1 curves from a steps x 4 (tp, fp, fn, tn) count array."""
    tp = counts[:, 0].astype(np.float64)
    fp = counts[:, 1].astype(np.float64)
    fn = counts[:, 2].astype(np.float64)
    denom = tp + fp + fn
    with np.errstate(invalid="ignore", divide="ignore"):
        iou = np.where(denom > 0, tp / denom, 0.0)
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        f1 = np.where(tp > 0,
                      2.0 * precision * recall / (precision + recall), 0.0)
    return iou, f1


def auiou(iou_curve) -> float:
    """Area under the IoU curve: the grid mean of the IoU values."""
    curve = np.asarray(iou_curve, dtype=np.float64)
    return float(curve.sum() / curve.size)


def mean_f1(f1_curve) -> float:
    """Grid mean of the F1 curve."""
    curve = np.asarray(f1_curve, dtype=np.float64)
    return float(curve.sum() / curve.size)


def _ranking_points(scores, pos):
    """Cumulative (tp, fp) after each unique score value, descending."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = pos[order]
    tp_cum = np.cumsum(sorted_pos)
    fp_cum = np.cumsum(~sorted_pos)
    # last index of each tied group
    last = np.flatnonzero(np.diff(sorted_scores) != 0)
    last = np.append(last, sorted_scores.size - 1)
    return tp_cum[last], fp_cum[last]


def auprc(values, gt) -> float:
    """Average precision via step integration over unique score values."""
    scores, pos = _masked(values, gt)
    n_pos = int(pos.sum())
    if n_pos == 0:
        raise ValidationError("undefined AP: ground truth has no OoD pixels")
    tp, fp = _ranking_points(scores, pos)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def fpr95(values, gt, tpr_level: float = 0.95) -> float:
    """False-positive rate at the first operating point with TPR >= 95%.

    Returns 1.0 when no operating point reaches the level.
    """
    scores, pos = _masked(values, gt)
    n_pos = int(pos.sum())
    n_neg = int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("FPR95 needs at least one OoD and one ID pixel")
    tp, fp = _ranking_points(scores, pos)
    tpr = tp / n_pos
    fpr = fp / n_neg
    ok = tpr >= tpr_level
    if not ok.any():
        return 1.0
    return float(fpr[ok].min())


def binary_iou(pred_mask, gt) -> float:
    """IoU of a binary prediction against the ternary ground truth."""
    pred = np.asarray(pred_mask, dtype=bool)
    mask = check_label_mask(gt)
    check_same_shape(pred, mask, "prediction and ground truth")
    keep = mask != IGNORE_LABEL
    pos = mask[keep] == OOD_LABEL
    p = pred[keep]
    inter = int((p & pos).sum())
    union = int((p | pos).sum())
    return inter / union if union else 0.0


# --- per-image reports and aggregation ---

@dataclass
class ImageReport:
    name: str
    sweep: SweepResult
    auiou: float
    mean_f1: float
    auprc: float | None
    fpr95: float | None
    scores: np.ndarray = field(repr=False)
    pos: np.ndarray = field(repr=False)
    threshold_free_iou: float | None = None
    zero_prompt: bool = False

    def scalars(self) -> dict:
        out = {
            "name": self.name,
            "best_iou": self.sweep.best_iou,
            "best_threshold": self.sweep.best_threshold,
            "auiou": self.auiou,
            "mean_f1": self.mean_f1,
            "auprc": self.auprc,
            "fpr95": self.fpr95,
        }
        if self.threshold_free_iou is not None:
            out["threshold_free_iou"] = self.threshold_free_iou
            out["zero_prompt"] = self.zero_prompt
        return out


def evaluate_image(values, gt, cfg: SweepConfig = SweepConfig(),
                   score_range=None, name: str = "") -> ImageReport:
    scores, pos = _masked(values, gt)
    sw = sweep(values, gt, cfg, score_range)
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    return ImageReport(
        name=name,
        sweep=sw,
        auiou=auiou(sw.iou_curve),
        mean_f1=mean_f1(sw.f1_curve),
        auprc=auprc(values, gt) if n_pos else None,
        fpr95=fpr95(values, gt) if n_pos and n_neg else None,
        scores=scores,
        pos=pos,
    )


@dataclass
class MetricReport:
    best_iou: float
    best_threshold: float
    auiou: float
    mean_f1: float
    auprc: float | None
    fpr95: float | None
    iou_curve: np.ndarray
    f1_curve: np.ndarray
    n_images: int
    steps: int
    range_mode: str
    aggregation: str
    per_image: list[dict]
    thresholds: np.ndarray | None = None
    thresholds_real: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "best_iou": self.best_iou,
            "best_threshold": self.best_threshold,
            "auiou": self.auiou,
            "mean_f1": self.mean_f1,
            "auprc": self.auprc,
            "fpr95": self.fpr95,
            "iou_curve": [float(v) for v in self.iou_curve],
            "f1_curve": [float(v) for v in self.f1_curve],
            "n_images": self.n_images,
            "sweep": {"steps": self.steps, "range": self.range_mode},
            "aggregation": self.aggregation,
            "per_image": self.per_image,
        }


def aggregate(reports: list[ImageReport], mode: str = "pool",
              cfg: SweepConfig = SweepConfig()) -> MetricReport:
    """Combine per-image reports into a dataset report.

    "pool" sums confusion counts across images per grid step before taking
    ratios, and pools pixels for AuPRC/FPR95; "mean" averages the
    per-image scalars (curves are averaged pointwise, ranking metrics over
    the images where they are defined).
    """
    if mode not in AGG_MODES:
        raise ValidationError(f"aggregation mode must be one of {AGG_MODES}")
    if not reports:
        raise ValidationError("cannot aggregate an empty report list")
    per_image = [r.scalars() for r in reports]

    if mode == "pool":
        counts = np.sum([r.sweep.counts for r in reports], axis=0)
        iou_curve, f1_curve = curves_from_counts(counts)
        best = int(np.argmax(iou_curve))
        # on a shared grid (dataset/unit range) all images map t identically
        ts_real = reports[0].sweep.thresholds_real
        shared = all(
            np.array_equal(r.sweep.thresholds_real, ts_real) for r in reports
        )
        best_threshold = float(ts_real[best]) if shared \
            else float(reports[0].sweep.thresholds[best])
        scores = np.concatenate([r.scores for r in reports])
        pos = np.concatenate([r.pos for r in reports])
        n_pos = int(pos.sum())
        n_neg = pos.size - n_pos
        pooled_auprc = pooled_fpr = None
        if n_pos:
            tp, fp = _ranking_points(scores, pos)
            recall = tp / n_pos
            precision = tp / (tp + fp)
            prev = np.concatenate([[0.0], recall[:-1]])
            pooled_auprc = float(np.sum((recall - prev) * precision))
            if n_neg:
                ok = recall >= 0.95
                pooled_fpr = float((fp / n_neg)[ok].min()) if ok.any() else 1.0
        return MetricReport(
            best_iou=float(iou_curve[best]),
            best_threshold=best_threshold,
            auiou=auiou(iou_curve),
            mean_f1=mean_f1(f1_curve),
            auprc=pooled_auprc,
            fpr95=pooled_fpr,
            iou_curve=iou_curve,
            f1_curve=f1_curve,
            n_images=len(reports),
            steps=cfg.steps,
            range_mode=cfg.range_mode,
            aggregation=mode,
            per_image=per_image,
            thresholds=reports[0].sweep.thresholds,
            thresholds_real=ts_real if shared else None,
        )

    iou_curve = np.mean([r.sweep.iou_curve for r in reports], axis=0)
    f1_curve = np.mean([r.sweep.f1_curve for r in reports], axis=0)
    auprcs = [r.auprc for r in reports if r.auprc is not None]
    fprs = [r.fpr95 for r in reports if r.fpr95 is not None]
    return MetricReport(
        best_iou=float(np.mean([r.sweep.best_iou for r in reports])),
        best_threshold=float(np.mean([r.sweep.best_threshold for r in reports])),
        auiou=float(np.mean([r.auiou for r in reports])),
        mean_f1=float(np.mean([r.mean_f1 for r in reports])),
        auprc=float(np.mean(auprcs)) if auprcs else None,
        fpr95=float(np.mean(fprs)) if fprs else None,
        iou_curve=iou_curve,
        f1_curve=f1_curve,
        n_images=len(reports),
        steps=cfg.steps,
        range_mode=cfg.range_mode,
        aggregation=mode,
        per_image=per_image,
        thresholds=reports[0].sweep.thresholds,
    )
