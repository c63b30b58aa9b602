import json

import numpy as np
import pytest
from click.testing import CliRunner

from s2m import io as s2m_io
from s2m.cli import main

runner = CliRunner()


@pytest.fixture
def logits_file(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "logits.npy"
    s2m_io.write_logits(rng.standard_normal((4, 8, 8)), path)
    return path


def invoke(args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


class TestScoreCommand:
    def test_entropy(self, tmp_path, logits_file):
        out = tmp_path / "scores.npy"
        invoke(["score", "--logits", str(logits_file), "--method", "entropy",
                "--out", str(out)])
        scores = s2m_io.read_scoremap(out)
        assert scores.shape == (8, 8)
        assert scores.max() <= 2.0 + 1e-6  # log2(4)

    def test_energy_with_scale(self, tmp_path, logits_file):
        out = tmp_path / "scores.npy"
        invoke(["score", "--logits", str(logits_file), "--method", "energy",
                "--temperature", "2.0", "--scale", "20", "--out", str(out)])
        assert s2m_io.read_scoremap(out).shape == (8, 8)

    def test_bad_logits_fail_cleanly(self, tmp_path):
        bad = tmp_path / "bad.npy"
        np.save(bad, np.zeros((2, 2), dtype=np.float32))  # 2D, not a stack
        out = tmp_path / "scores.npy"
        result = runner.invoke(main, ["score", "--logits", str(bad),
                                      "--out", str(out)])
        assert result.exit_code != 0


@pytest.fixture
def object_dir(tmp_path):
    d = tmp_path / "objects"
    d.mkdir()
    rng = np.random.default_rng(1)
    for i in range(2):
        crop = rng.integers(0, 256, size=(6, 6, 3), dtype=np.uint8)
        mask = np.zeros((6, 6), dtype=bool)
        mask[1:5, 1:5] = True
        s2m_io.write_image(crop, d / f"obj{i}_img.png")
        s2m_io.write_binary_mask(mask, d / f"obj{i}_mask.png")
    return d


@pytest.fixture
def inlier_dir(tmp_path):
    d = tmp_path / "inliers"
    d.mkdir()
    rng = np.random.default_rng(2)
    for i in range(2):
        s2m_io.write_image(
            rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8),
            d / f"bg{i}.png")
    return d


class TestSynthCommand:
    def test_emits_triplets(self, tmp_path, inlier_dir, object_dir):
        out = tmp_path / "oe"
        invoke(["synth", "--inlier-dir", str(inlier_dir),
                "--object-dir", str(object_dir), "--out", str(out),
                "--count", "3", "--seed", "5"])
        for i in range(3):
            assert (out / f"img_{i:06d}.png").exists()
            gt = s2m_io.read_labelmask(out / f"gt_{i:06d}.png")
            assert (gt == 1).any()
            doc = json.loads((out / f"boxes_{i:06d}.json").read_text())
            assert doc["boxes"]

    def test_deterministic(self, tmp_path, inlier_dir, object_dir):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            invoke(["synth", "--inlier-dir", str(inlier_dir),
                    "--object-dir", str(object_dir), "--out", str(out),
                    "--count", "2", "--seed", "7"])
            outs.append((out / "img_000000.png").read_bytes())
        assert outs[0] == outs[1]


def full_pipeline_fixture(tmp_path):
    rng = np.random.default_rng(3)
    scores_dir = tmp_path / "scores"
    gt_dir = tmp_path / "gt"
    scores_dir.mkdir()
    gt_dir.mkdir()
    for i in range(2):
        gt = np.zeros((32, 32), dtype=np.uint8)
        gt[8:20, 10:22] = 1
        scores = gt + rng.normal(0, 0.05, gt.shape)
        s2m_io.write_scoremap(scores, scores_dir / f"img_{i:06d}.npy")
        s2m_io.write_labelmask(gt, gt_dir / f"gt_{i:06d}.png")
    return scores_dir, gt_dir


class TestPromptsSegmentCommands:
    def test_prompts_then_segment(self, tmp_path):
        scores_dir, _ = full_pipeline_fixture(tmp_path)
        score_file = scores_dir / "img_000000.npy"
        boxes = tmp_path / "boxes.json"
        invoke(["prompts", "--scores", str(score_file), "--out", str(boxes)])
        doc = json.loads(boxes.read_text())
        assert len(doc["boxes"]) >= 1

        conf = tmp_path / "conf.npy"
        mask_png = tmp_path / "mask.png"
        invoke(["segment", "--scores", str(score_file), "--boxes", str(boxes),
                "--out", str(conf), "--mask-out", str(mask_png)])
        fused = s2m_io.read_scoremap(conf)
        mask = s2m_io.read_binary_mask(mask_png)
        assert np.array_equal(mask, fused > 0)
        assert mask[14, 16]

    def test_segment_with_external_masks(self, tmp_path):
        scores_dir, _ = full_pipeline_fixture(tmp_path)
        score_file = scores_dir / "img_000000.npy"
        mask_dir = tmp_path / "ext"
        mask_dir.mkdir()
        m = np.zeros((32, 32), dtype=bool)
        m[8:20, 10:22] = True
        s2m_io.write_binary_mask(m, mask_dir / "mask_000.png")
        conf_json = tmp_path / "confs.json"
        conf_json.write_text(json.dumps({"confidences": [0.8]}))
        out = tmp_path / "conf.npy"
        invoke(["segment", "--scores", str(score_file),
                "--external-masks", str(mask_dir),
                "--confidences", str(conf_json), "--out", str(out)])
        fused = s2m_io.read_scoremap(out)
        assert fused[10, 12] == np.float32(0.8)
        assert fused[0, 0] == 0.0


class TestEvalCommand:
    def test_report_schema(self, tmp_path):
        scores_dir, gt_dir = full_pipeline_fixture(tmp_path)
        report_path = tmp_path / "report.json"
        csv_path = tmp_path / "per_image.csv"
        curves_dir = tmp_path / "curves"
        invoke(["eval", "--pred-dir", str(scores_dir), "--gt-dir", str(gt_dir),
                "--report", str(report_path), "--csv", str(csv_path),
                "--curves", str(curves_dir)])
        doc = json.loads(report_path.read_text())
        for key in ("best_iou", "best_threshold", "auiou", "mean_f1", "auprc",
                    "fpr95", "n_images", "sweep", "per_image"):
            assert key in doc
        assert doc["sweep"] == {"steps": 100, "range": "dataset"}
        assert doc["n_images"] == 2
        assert (curves_dir / "sweep_curve.csv").exists()
        assert len(csv_path.read_text().strip().splitlines()) == 3


class TestPipelineCommand:
    def test_end_to_end_with_config(self, tmp_path):
        scores_dir, gt_dir = full_pipeline_fixture(tmp_path)
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            'quantile = 0.95\nmin_area = 16\nalpha = 0.5\n'
            'noise = 0.01\nseed = 3\nrange = "unit"\n')
        report_path = tmp_path / "report.json"
        manifest_path = tmp_path / "run.json"
        viz_dir = tmp_path / "viz"
        result = invoke(["pipeline", "--scores-dir", str(scores_dir),
                         "--gt-dir", str(gt_dir), "--config", str(cfg),
                         "--report", str(report_path),
                         "--manifest", str(manifest_path),
                         "--viz-dir", str(viz_dir)])
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["n_images"] == 2
        manifest = json.loads(manifest_path.read_text())
        assert manifest["seed"] == 3
        assert len(manifest["images"]) == 2
        assert (viz_dir / "000000.png").exists()

    def test_byte_identical_reports(self, tmp_path):
        scores_dir, gt_dir = full_pipeline_fixture(tmp_path)
        blobs = []
        for name in ("r1.json", "r2.json"):
            report_path = tmp_path / name
            invoke(["pipeline", "--scores-dir", str(scores_dir),
                    "--gt-dir", str(gt_dir),
                    "--report", str(report_path),
                    "--manifest", str(tmp_path / ("m_" + name))])
            blobs.append(report_path.read_bytes())
        assert blobs[0] == blobs[1]
