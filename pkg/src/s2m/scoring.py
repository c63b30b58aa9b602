"""Per-pixel anomaly scores from segmentation logits.

Two scores are provided: Shannon entropy of the softmax distribution
(in bits, so a uniform C-class pixel scores log2 C) and the energy score
-T * log(sum_c exp(f_c / T)).  Higher values mean more anomalous for
entropy; for energy, less-negative values do.
"""

from __future__ import annotations

import numpy as np

from .validation import ValidationError, check_logit_stack, check_score_map


def softmax_probs(logits) -> np.ndarray:
    """Per-pixel softmax over the class axis of a CxHxW stack.

    Computed with max-subtraction so extreme logits cannot overflow.
    """
    stack = check_logit_stack(logits)
    shifted = stack - stack.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def entropy_score(logits) -> np.ndarray:
    """Shannon entropy (base 2) of the per-pixel class distribution.

    Bounded by [0, log2 C]; vanishing probabilities contribute zero.
    """
    stack = check_logit_stack(logits)
    shifted = stack - stack.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    total = e.sum(axis=0)
    probs = e / total
    # H = log2(sum e^s) - (sum p*s)/ln 2 with s max-shifted; written this
    # way the uniform case reduces to log2(C) with no rounding error.
    h = np.log2(total) - (probs * shifted).sum(axis=0) / np.log(2.0)
    return np.maximum(h, 0.0)


def energy_score(logits, temperature: float = 1.0, literal_form: bool = False) -> np.ndarray:
    """Energy score of each pixel.

    The default is -T * log(sum_c exp(f_c / T)) evaluated via a stable
    log-sum-exp.  ``literal_form`` drops the logarithm and returns
    -T * sum_c exp(f_c / T) instead; it is provided for completeness but
    overflows for large logits by construction.
    """
    if not temperature > 0:
        raise ValidationError(f"temperature must be positive, got {temperature}")
    stack = check_logit_stack(logits)
    scaled = stack / temperature
    if literal_form:
        return -temperature * np.exp(scaled).sum(axis=0)
    m = scaled.max(axis=0)
    lse = m + np.log(np.exp(scaled - m).sum(axis=0))
    return -temperature * lse


def scale_scores(score_map, factor: float) -> np.ndarray:
    """Multiply every score by a constant amplification factor."""
    arr = check_score_map(score_map)
    if not np.isfinite(factor):
        raise ValidationError("scale factor must be finite")
    with np.errstate(over="ignore"):
        out = arr * float(factor)
    if not np.isfinite(out).all():
        raise ValidationError("scaling produced non-finite scores")
    return out


def normalize_scores(score_map, score_range=None) -> np.ndarray:
    """Affinely map scores into [0, 1], clamping out-of-range values.

    ``score_range`` is an explicit (low, high) pair; when omitted the
    per-image min and max are used.  A degenerate range (high == low)
    yields an all-zero map: constant scores carry no anomaly signal.
    """
    arr = check_score_map(score_map)
    if score_range is None:
        lo, hi = float(arr.min()), float(arr.max())
    else:
        lo, hi = (float(v) for v in score_range)
        if hi < lo:
            raise ValidationError(f"invalid score range ({lo}, {hi})")
    if hi == lo:
        return np.zeros_like(arr)
    return np.clip((arr - lo) / (hi - lo), 0.0, 1.0)
