import numpy as np
import pytest

import oracles
from s2m import metrics
from s2m.metrics import (
    SweepConfig,
    aggregate,
    auiou,
    auprc,
    binary_iou,
    confusion_at,
    evaluate_image,
    fpr95,
    mean_f1,
    sweep,
    threshold_map,
)
from s2m.validation import ValidationError

ONE_BY_FOUR = (np.array([[0.1, 0.4, 0.6, 0.9]]),
               np.array([[0, 0, 1, 1]], dtype=np.uint8))


class TestConfusion:
    def test_all_ignore(self):
        gt = np.full((3, 3), 255, dtype=np.uint8)
        c = confusion_at(np.ones((3, 3)), gt, 0.5)
        assert (c.tp, c.fp, c.fn, c.tn) == (0, 0, 0, 0)

    def test_perfect_binary_map(self):
        gt = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        c = confusion_at(gt.astype(float), gt, 0.5)
        assert c.fp == 0 and c.fn == 0 and c.tp == 2 and c.tn == 2

    def test_hand_counted(self):
        c = confusion_at(*ONE_BY_FOUR, 0.5)
        assert (c.tp, c.fp, c.fn, c.tn) == (2, 0, 0, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="mismatch"):
            confusion_at(np.zeros((2, 2)), np.zeros((3, 3), dtype=np.uint8), 0)


class TestThresholdMap:
    def test_endpoints(self):
        assert threshold_map(0.0, -20.0, 10.0) == -20.0
        assert threshold_map(1.0, -20.0, 10.0) == 10.0

    def test_midpoint(self):
        assert threshold_map(0.5, -20.0, 10.0) == -5.0

    def test_degenerate_range(self):
        assert threshold_map(0.7, 3.0, 3.0) == 3.0


class TestSweep:
    def test_no_positives_all_zero_curve(self):
        gt = np.zeros((2, 2), dtype=np.uint8)
        sw = sweep(np.zeros((2, 2)), gt, SweepConfig(range_mode="unit"))
        assert not sw.iou_curve.any()

    def test_one_by_four_bands(self):
        sw = sweep(*ONE_BY_FOUR, SweepConfig(range_mode="image"))
        ious = sw.iou_curve
        assert np.allclose(ious[:38], 2 / 3)
        assert np.allclose(ious[38:63], 1.0)
        assert np.allclose(ious[63:], 0.5)
        assert sw.best_iou == 1.0

    def test_perfect_binary_unit_range(self):
        gt = np.array([[0, 1, 1, 0]], dtype=np.uint8)
        sw = sweep(gt.astype(float), gt, SweepConfig(range_mode="unit"))
        assert sw.best_iou == 1.0

    def test_counts_monotone(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((16, 16))
        gt = oracles.random_label_mask(rng, 16, 16)
        sw = sweep(m, gt, SweepConfig(range_mode="image"))
        assert (np.diff(sw.counts[:, 0]) <= 0).all()  # TP
        assert (np.diff(sw.counts[:, 1]) <= 0).all()  # FP


class TestGridMeans:
    def test_auiou_extremes(self):
        assert auiou(np.ones(100)) == 1.0
        assert auiou(np.zeros(100)) == 0.0

    def test_one_by_four_auiou(self):
        sw = sweep(*ONE_BY_FOUR, SweepConfig(range_mode="image"))
        assert auiou(sw.iou_curve) == pytest.approx(0.688333, abs=1e-6)

    def test_one_by_four_mean_f1(self):
        sw = sweep(*ONE_BY_FOUR, SweepConfig(range_mode="image"))
        assert mean_f1(sw.f1_curve) == pytest.approx(0.800667, abs=1e-6)

    def test_perfect_prediction_mean_f1(self):
        gt = np.array([[0, 1]], dtype=np.uint8)
        sw = sweep(gt.astype(float), gt, SweepConfig(range_mode="unit"))
        assert mean_f1(sw.f1_curve) == 1.0

    def test_best_iou_at_least_auiou(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = rng.standard_normal((12, 12))
            gt = oracles.random_label_mask(rng, 12, 12)
            sw = sweep(m, gt, SweepConfig(range_mode="image"))
            assert sw.best_iou >= auiou(sw.iou_curve) - 1e-15


class TestRankingMetrics:
    def test_perfect_separation(self):
        m = np.array([[0.0, 0.1, 0.8, 0.9]])
        gt = np.array([[0, 0, 1, 1]], dtype=np.uint8)
        assert auprc(m, gt) == 1.0
        assert fpr95(m, gt) == 0.0

    def test_anti_separation_ap(self):
        m = np.array([[4.0, 3.0, 2.0, 1.0]])
        gt = np.array([[0, 0, 1, 1]], dtype=np.uint8)
        assert auprc(m, gt) == pytest.approx(1 / 6 + 1 / 4, abs=1e-12)

    def test_one_by_four(self):
        assert auprc(*ONE_BY_FOUR) == 1.0
        assert fpr95(*ONE_BY_FOUR) == 0.0

    def test_constant_scores_fpr_one(self):
        gt = np.array([[0, 1, 1, 0]], dtype=np.uint8)
        assert fpr95(np.zeros((1, 4)), gt) == 1.0

    def test_no_positives_rejected(self):
        gt = np.zeros((2, 2), dtype=np.uint8)
        with pytest.raises(ValidationError, match="undefined AP"):
            auprc(np.zeros((2, 2)), gt)
        with pytest.raises(ValidationError):
            fpr95(np.zeros((2, 2)), gt)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            m = rng.standard_normal((10, 10))
            gt = oracles.random_label_mask(rng, 10, 10)
            if not (gt == 1).any() or not (gt == 0).any():
                continue
            assert auprc(np.exp(m), gt) == auprc(m, gt)
            assert fpr95(np.exp(m), gt) == fpr95(m, gt)

    def test_ignored_pixels_irrelevant(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((8, 8))
        gt = oracles.random_label_mask(rng, 8, 8, p_ignore=0.3)
        if not (gt == 1).any():
            gt[0, 0] = 1
        m2 = m.copy()
        m2[gt == 255] = 1e6
        assert auprc(m, gt) == auprc(m2, gt)
        assert fpr95(m, gt) == fpr95(m2, gt)
        sw1 = sweep(m, gt, SweepConfig(range_mode="unit"))
        sw2 = sweep(m2, gt, SweepConfig(range_mode="unit"))
        assert np.array_equal(sw1.counts, sw2.counts)


class TestOracleEquivalence:
    def test_random_maps_against_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            h, w = rng.integers(2, 20, size=2)
            m = rng.standard_normal((h, w))
            gt = oracles.random_label_mask(rng, h, w)
            sw = sweep(m, gt, SweepConfig(range_mode="image"))
            exp_iou, exp_f1, exp_counts = oracles.sweep_curves(m, gt)
            assert np.allclose(sw.iou_curve, exp_iou, atol=1e-9)
            assert np.allclose(sw.f1_curve, exp_f1, atol=1e-9)
            assert [tuple(c) for c in sw.counts] == exp_counts
            if (gt == 1).any():
                assert auprc(m, gt) == pytest.approx(
                    oracles.average_precision(m, gt), abs=1e-9)
                if (gt == 0).any():
                    assert fpr95(m, gt) == pytest.approx(
                        oracles.fpr_at_tpr(m, gt), abs=1e-9)


class TestAggregate:
    def one_report(self, rng, name="img"):
        m = rng.standard_normal((10, 10))
        gt = oracles.random_label_mask(rng, 10, 10)
        gt[0, 0] = 1
        gt[0, 1] = 0
        return evaluate_image(m, gt, SweepConfig(range_mode="image"),
                              name=name), m, gt

    def test_single_image_same_under_both_modes(self):
        rng = np.random.default_rng(5)
        report, _, _ = self.one_report(rng)
        for mode in ("pool", "mean"):
            agg = aggregate([report], mode=mode)
            assert agg.best_iou == pytest.approx(report.sweep.best_iou)
            assert agg.auiou == pytest.approx(report.auiou)
            assert agg.mean_f1 == pytest.approx(report.mean_f1)

    def test_two_identical_images_pool_homogeneous(self):
        rng = np.random.default_rng(6)
        r1, m, gt = self.one_report(rng)
        r2 = evaluate_image(m, gt, SweepConfig(range_mode="image"), name="b")
        agg = aggregate([r1, r2], mode="pool")
        assert agg.best_iou == pytest.approx(r1.sweep.best_iou)
        assert agg.auiou == pytest.approx(r1.auiou)
        assert agg.auprc == pytest.approx(r1.auprc)

    def test_pool_matches_hand_summed_counts(self):
        rng = np.random.default_rng(7)
        cfg = SweepConfig(range_mode="dataset")
        maps, gts, reports = [], [], []
        lo = hi = None
        for name in ("a", "b"):
            m = rng.standard_normal((8, 8))
            gt = oracles.random_label_mask(rng, 8, 8)
            maps.append(m)
            gts.append(gt)
        lo = min(m.min() for m in maps)
        hi = max(m.max() for m in maps)
        for name, m, gt in zip("ab", maps, gts):
            reports.append(evaluate_image(m, gt, cfg, score_range=(lo, hi),
                                          name=name))
        agg = aggregate(reports, mode="pool", cfg=cfg)
        pooled = [np.array(oracles.sweep_curves(m, gt, score_range=(lo, hi))[2])
                  for m, gt in zip(maps, gts)]
        total = pooled[0] + pooled[1]
        exp_iou = [oracles.iou_f1(*row[:3])[0] for row in total]
        assert np.allclose(agg.iou_curve, exp_iou, atol=1e-9)

    def test_empty_list_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            aggregate([])


class TestBinaryIou:
    def test_exact_match(self):
        gt = np.array([[0, 1], [255, 1]], dtype=np.uint8)
        pred = np.array([[False, True], [True, True]])
        assert binary_iou(pred, gt) == 1.0  # ignored pixel plays no role

    def test_empty_both(self):
        gt = np.zeros((2, 2), dtype=np.uint8)
        assert binary_iou(np.zeros((2, 2), dtype=bool), gt) == 0.0
