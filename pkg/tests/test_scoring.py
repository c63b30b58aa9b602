import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from s2m import scoring
from s2m.validation import ValidationError


def stack(*pixel_logits):
    """Build a Cx1xN logit stack from per-pixel tuples."""
    arr = np.array(pixel_logits, dtype=np.float64).T
    return arr[:, None, :]


class TestSoftmax:
    def test_symmetric_two_class(self):
        probs = scoring.softmax_probs(stack((0.0, 0.0)))
        assert np.allclose(probs[:, 0, 0], [0.5, 0.5], atol=1e-12)

    def test_extreme_logits_stable(self):
        probs = scoring.softmax_probs(stack((1000.0, 0.0)))
        assert np.isfinite(probs).all()
        assert probs[0, 0, 0] == pytest.approx(1.0)

    def test_analytic_ln2(self):
        probs = scoring.softmax_probs(stack((np.log(2.0), 0.0)))
        assert probs[:, 0, 0] == pytest.approx([2 / 3, 1 / 3], abs=1e-12)

    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        probs = scoring.softmax_probs(rng.standard_normal((7, 5, 6)) * 50)
        assert np.abs(probs.sum(axis=0) - 1.0).max() < 1e-12
        assert (probs > 0).all()


class TestEntropy:
    def test_uniform_four_class(self):
        h = scoring.entropy_score(np.zeros((4, 3, 3)))
        assert np.allclose(h, 2.0, atol=1e-12)

    def test_one_hot_zero_entropy(self):
        h = scoring.entropy_score(stack((1000.0, 0.0)))
        assert h[0, 0] == pytest.approx(0.0, abs=1e-9)

    def test_hand_computed_two_class(self):
        # P = (0.75, 0.25)
        h = scoring.entropy_score(stack((np.log(3.0), 0.0)))
        expected = -(0.75 * np.log2(0.75) + 0.25 * np.log2(0.25))
        assert h[0, 0] == pytest.approx(expected, abs=1e-12)
        assert h[0, 0] == pytest.approx(0.811278, abs=1e-6)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_permutation_invariant_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        logits = rng.standard_normal((5, 2, 3)) * 10
        h = scoring.entropy_score(logits)
        perm = rng.permutation(5)
        assert np.allclose(scoring.entropy_score(logits[perm]), h, atol=1e-12)
        assert (h >= 0).all() and (h <= np.log2(5) + 1e-12).all()


class TestEnergy:
    def test_uniform_nineteen_class(self):
        e = scoring.energy_score(np.zeros((19, 2, 2)), temperature=1.0)
        assert np.allclose(e, -np.log(19.0), atol=1e-12)

    def test_dominant_logit_limit(self):
        logits = stack((50.0, -50.0, -50.0))
        e = scoring.energy_score(logits)
        assert e[0, 0] == pytest.approx(-50.0, abs=1e-12)

    def test_literal_form_two_class(self):
        e = scoring.energy_score(stack((0.0, 0.0)), temperature=1.0,
                                 literal_form=True)
        assert e[0, 0] == pytest.approx(-2.0, abs=1e-12)

    def test_translation_covariance(self):
        rng = np.random.default_rng(5)
        logits = rng.standard_normal((6, 3, 4))
        e = scoring.energy_score(logits)
        shifted = scoring.energy_score(logits + 3.25)
        assert np.allclose(shifted, e - 3.25, atol=1e-9)

    def test_no_overflow_on_huge_logits(self):
        e = scoring.energy_score(stack((2000.0, 1990.0)))
        assert np.isfinite(e).all()

    def test_temperature_must_be_positive(self):
        with pytest.raises(ValidationError):
            scoring.energy_score(np.zeros((2, 1, 1)), temperature=0.0)


class TestScaleScores:
    def test_identity(self):
        m = np.array([[1.0, -2.0]])
        assert np.array_equal(scoring.scale_scores(m, 1.0), m)

    def test_factor_twenty_bounds(self):
        rng = np.random.default_rng(1)
        m = rng.random((8, 8))
        out = scoring.scale_scores(m, 20.0)
        assert out.min() >= 0.0 and out.max() <= 20.0
        assert np.allclose(out, m * 20.0)

    def test_factor_zero(self):
        assert not scoring.scale_scores(np.ones((3, 3)), 0.0).any()

    def test_overflow_rejected(self):
        with pytest.raises(ValidationError):
            scoring.scale_scores(np.full((2, 2), 1e308), 1e10)


class TestNormalize:
    def test_per_image_endpoints(self):
        out = scoring.normalize_scores(np.array([[-20.0, -5.0, 10.0]]))
        assert np.allclose(out, [[0.0, 0.5, 1.0]], atol=1e-12)

    def test_constant_map_all_zero(self):
        assert not scoring.normalize_scores(np.full((4, 4), 3.7)).any()

    def test_explicit_range_clamps(self):
        out = scoring.normalize_scores(np.array([[3.0]]), score_range=(0.0, 2.0))
        assert out[0, 0] == 1.0

    def test_monotone_order_preserved(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((10, 10))
        out = scoring.normalize_scores(m)
        flat_in = m.ravel()
        flat_out = out.ravel()
        order = np.argsort(flat_in)
        assert (np.diff(flat_out[order]) >= -1e-15).all()
