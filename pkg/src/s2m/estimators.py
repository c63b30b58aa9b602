"""Scikit-learn style wrappers so the pipeline composes with the wider
ecosystem.

``X`` is a sequence of 2D score maps (or a single N x H x W array).  The
transformers are stateless apart from ``ScoreNormalizer``, whose fit
learns the dataset-level score range.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import prompts, scoring, segmenter
from .bench import PipelineConfig, process_image
from .metrics import SweepConfig
from .prompts import NoiseSpec, PromptGenConfig
from .segmenter import SegmenterConfig


def _as_maps(X):
    if isinstance(X, np.ndarray) and X.ndim == 3:
        return [X[i] for i in range(X.shape[0])]
    return list(X)


class ScoreNormalizer(BaseEstimator, TransformerMixin):
    """Affine [0, 1] normalization against the fitted dataset score range."""

    def fit(self, X, y=None):
        maps = _as_maps(X)
        self.s_min_ = min(float(np.min(m)) for m in maps)
        self.s_max_ = max(float(np.max(m)) for m in maps)
        return self

    def transform(self, X):
        if not hasattr(self, "s_min_"):
            raise NotFittedError("ScoreNormalizer is not fitted")
        return [scoring.normalize_scores(m, (self.s_min_, self.s_max_))
                for m in _as_maps(X)]


class BoxPromptGenerator(BaseEstimator):
    """Stateless reference prompt generator with a predict interface."""

    def __init__(self, quantile=0.95, min_area=16, merge_iou=0.5,
                 connectivity=8):
        self.quantile = quantile
        self.min_area = min_area
        self.merge_iou = merge_iou
        self.connectivity = connectivity

    def fit(self, X, y=None):
        return self

    def predict(self, X):
        cfg = PromptGenConfig(quantile=self.quantile, min_area=self.min_area,
                              merge_iou=self.merge_iou,
                              connectivity=self.connectivity)
        return [prompts.generate_prompts(m, cfg) for m in _as_maps(X)]


class ScoreToMask(BaseEstimator, TransformerMixin):
    """Full score-to-mask pipeline as a transformer.

    ``transform`` maps score maps to confidence maps in [0, 1];
    ``predict`` returns the threshold-free binary masks (confidence > 0).
    """

    def __init__(self, quantile=0.95, min_area=16, merge_iou=0.5,
                 connectivity=8, alpha=0.5, margin=0.1, noise=0.0, seed=0):
        self.quantile = quantile
        self.min_area = min_area
        self.merge_iou = merge_iou
        self.connectivity = connectivity
        self.alpha = alpha
        self.margin = margin
        self.noise = noise
        self.seed = seed

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            prompt=PromptGenConfig(quantile=self.quantile,
                                   min_area=self.min_area,
                                   merge_iou=self.merge_iou,
                                   connectivity=self.connectivity),
            segment=SegmenterConfig(alpha=self.alpha, margin=self.margin),
            noise=NoiseSpec(amplitude=self.noise, seed=self.seed)
            if self.noise else None,
            sweep=SweepConfig(range_mode="unit"),
            seed=self.seed,
        )

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        cfg = self._config()
        out = []
        for i, m in enumerate(_as_maps(X)):
            fused, _, _ = process_image(m, cfg, stem=str(i))
            out.append(fused)
        return out

    def predict(self, X):
        return [segmenter.binarize_confidence(c) for c in self.transform(X)]
