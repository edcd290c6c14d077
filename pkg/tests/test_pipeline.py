"""Experiment orchestration: metric/footprint formulas, report
reproducibility, fold hygiene, and thread invariance."""

import json

import numpy as np
import pytest

from hdembed.config import ExperimentConfig
from hdembed.data import generate_synthetic, separable_synth_spec
from hdembed.pipeline import (accuracy, footprint_bits, run_experiment,
                              write_report)

BANDS = ((6.0, 10.0), (14.0, 18.0), (22.0, 26.0))


@pytest.fixture(scope="module")
def tiny_ds():
    return generate_synthetic(separable_synth_spec(n_trials=48, seed=2))


def _cfg(**overrides):
    cfg = ExperimentConfig()
    cfg.bands = BANDS
    cfg.seed = 1
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


class TestAccuracy:
    def test_fraction_correct(self):
        preds = np.array([1] * 45 + [2] * 15)
        labels = np.array([1] * 60)
        assert accuracy(preds, labels) == 75.0

    def test_extremes(self):
        assert accuracy(np.array([1, 2]), np.array([1, 2])) == 100.0
        assert accuracy(np.array([1, 2]), np.array([2, 1])) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy(np.array([]), np.array([]))


class TestFootprint:
    def test_worked_examples(self):
        bits = footprint_bits("thermometer", 4, 10000, 253, 43)
        assert bits["am"] == 40000
        assert bits["hd_encoder"] == 10000
        assert bits["embedding"] == 0
        bits = footprint_bits("learned", 4, 10000, 253, 43)
        assert bits["embedding"] == 20_240_000

    def test_formulas_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n_cl = int(rng.integers(2, 10))
            dim = int(rng.integers(100, 100000))
            nf = int(rng.integers(10, 300))
            nb = int(rng.integers(1, 50))
            assert footprint_bits("random_projection", n_cl, dim, nf, nb) == {
                "am": n_cl * dim,
                "hd_encoder": dim,
                "embedding": 2 * nf * dim,
                "svm_reference": 64 * n_cl * nf * nb,
            }

    def test_unknown_embedding(self):
        with pytest.raises(ValueError):
            footprint_bits("pca", 2, 100, 10, 3)


class TestRunExperiment:
    def test_reports_reproducible(self, tiny_ds):
        r1 = run_experiment(_cfg(), tiny_ds)
        r2 = run_experiment(_cfg(), tiny_ds)
        assert r1.fold_accuracies == r2.fold_accuracies
        np.testing.assert_array_equal(r1.confusion, r2.confusion)
        for a, b in zip(r1.prototype_similarity, r2.prototype_similarity):
            np.testing.assert_array_equal(a, b)

    def test_threads_do_not_change_results(self, tiny_ds):
        r1 = run_experiment(_cfg(threads=1), tiny_ds)
        r2 = run_experiment(_cfg(threads=3), tiny_ds)
        assert r1.fold_accuracies == r2.fold_accuracies
        np.testing.assert_array_equal(r1.confusion, r2.confusion)

    def test_mismatched_dim_fails_before_compute(self, tiny_ds):
        from hdembed.config import ConfigError

        cfg = _cfg()
        cfg.apply("embedding", "thermometer")
        cfg.apply("dim", "12345")
        with pytest.raises(ConfigError):
            run_experiment(cfg, tiny_ds)

    def test_report_files(self, tiny_ds, tmp_path):
        report = run_experiment(_cfg(), tiny_ds)
        write_report(report, tmp_path / "out")
        doc = json.loads((tmp_path / "out" / "report.json").read_text())
        assert doc["mean_accuracy"] == report.mean_accuracy
        assert doc["config"]["seed"] == 1
        assert (tmp_path / "out" / "summary.txt").read_text().startswith("embedding")

    def test_confusion_totals(self, tiny_ds):
        report = run_experiment(_cfg(), tiny_ds)
        assert report.confusion.sum() == tiny_ds.n_trials

    def test_multi_prototype_path(self, tiny_ds):
        report = run_experiment(_cfg(am_k=2, am_restarts=2, am_iters=20), tiny_ds)
        assert report.prototype_similarity[0].shape == (6, 6)

    def test_unclipped_training_path(self, tiny_ds):
        report = run_experiment(_cfg(clip_output=False), tiny_ds)
        assert report.mean_accuracy > 50.0

    def test_preset_bands_resolved_in_report(self, tiny_ds):
        cfg = _cfg()
        cfg.bands = "3class"
        report = run_experiment(cfg, tiny_ds)
        assert report.band_list[0] == [4.0, 6.0]
        assert len(report.band_list) == 13

    def test_two_class_disjoint_bands_reach_90(self):
        ds = generate_synthetic(separable_synth_spec(n_classes=2, n_trials=48,
                                                     seed=4))
        cfg = _cfg()
        cfg.bands = ((6.0, 10.0), (14.0, 18.0))
        report = run_experiment(cfg, ds)
        assert report.mean_accuracy >= 90.0
