import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from s2m.estimators import BoxPromptGenerator, ScoreNormalizer, ScoreToMask


def blob_maps(n=3, size=48, seed=0):
    rng = np.random.default_rng(seed)
    maps = []
    for _ in range(n):
        m = rng.normal(0, 0.05, (size, size))
        m[6:16, 4:14] += 1.0
        maps.append(m)
    return maps


class TestScoreNormalizer:
    def test_fit_learns_dataset_range(self):
        maps = [np.array([[0.0, 2.0]]), np.array([[-2.0, 1.0]])]
        est = ScoreNormalizer().fit(maps)
        assert (est.s_min_, est.s_max_) == (-2.0, 2.0)
        out = est.transform([np.array([[-2.0, 0.0, 2.0]])])
        assert np.allclose(out[0], [[0.0, 0.5, 1.0]])

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            ScoreNormalizer().transform([np.zeros((2, 2))])


class TestBoxPromptGenerator:
    def test_predict_boxes(self):
        est = BoxPromptGenerator(quantile=0.9).fit(None)
        (boxes,) = est.predict(blob_maps(n=1))
        assert len(boxes) >= 1

    def test_get_params_round_trip(self):
        est = BoxPromptGenerator(quantile=0.8, min_area=4)
        params = est.get_params()
        assert params["quantile"] == 0.8
        assert clone(est).get_params() == params


class TestScoreToMask:
    def test_transform_confidence_maps(self):
        maps = blob_maps()
        out = ScoreToMask().fit(maps).transform(maps)
        assert len(out) == len(maps)
        for conf in out:
            assert conf.min() >= 0.0 and conf.max() <= 1.0

    def test_predict_recovers_blob(self):
        maps = blob_maps(n=1)
        (mask,) = ScoreToMask().predict(maps)
        gt = np.zeros((48, 48), dtype=bool)
        gt[6:16, 4:14] = True
        inter = (mask & gt).sum()
        union = (mask | gt).sum()
        assert inter / union > 0.8

    def test_accepts_stacked_array(self):
        X = np.stack(blob_maps())
        out = ScoreToMask().transform(X)
        assert len(out) == X.shape[0]

    def test_sklearn_param_interface(self):
        est = ScoreToMask(alpha=0.6, noise=0.01, seed=4)
        cloned = clone(est)
        assert cloned.get_params()["alpha"] == 0.6
        est.set_params(quantile=0.9)
        assert est.get_params()["quantile"] == 0.9
