"""Study orchestration: panels, dataset assembly, and model comparison."""

import json

import numpy as np
import pytest

from dspr.learning import TrainConfig
from dspr.pipeline import (
    StudyConfig,
    build_dataset,
    compare_models,
    risk_rows,
    risk_rows_batch,
    run_study,
    simulate_panels,
    slice_panel,
)
from dspr.scene import RatingPanel
from dspr.synthetic import default_profiles, default_suite


@pytest.fixture(scope="module")
def small_study():
    scenarios = default_suite(3, n_clips=6, min_duration=5.0, max_duration=7.0)
    config = StudyConfig(train=TrainConfig(max_epochs=300))
    risk_by_clip = risk_rows_batch(scenarios, config.params)
    panel = simulate_panels(scenarios, risk_by_clip,
                            default_profiles(10, 0.3, 2), seed=4)
    return scenarios, config, risk_by_clip, panel


class TestPanelPlumbing:
    def test_slice_panel_partitions_columns(self, small_study):
        scenarios, _, _, panel = small_study
        slices = slice_panel(panel, scenarios)
        assert len(slices) == len(scenarios)
        assert sum(p.n_frames for p in slices) == panel.n_frames
        offset = 0
        for scenario, sliced in zip(scenarios, slices):
            n = len(scenario.frames)
            assert (sliced.ratings == panel.ratings[:, offset:offset + n]).all()
            offset += n

    def test_slice_rejects_column_mismatch(self, small_study):
        scenarios, _, _, _ = small_study
        bad = RatingPanel("x", np.ones((3, 7), dtype=int))
        with pytest.raises(ValueError):
            slice_panel(bad, scenarios)

    def test_simulated_panels_deterministic(self, small_study):
        scenarios, _, risk_by_clip, _ = small_study
        a = simulate_panels(scenarios, risk_by_clip,
                            default_profiles(6, 0.4, 1), seed=9)
        b = simulate_panels(scenarios, risk_by_clip,
                            default_profiles(6, 0.4, 1), seed=9)
        assert (a.ratings == b.ratings).all()


class TestDatasetAssembly:
    def test_partitions_and_balancing(self, small_study):
        scenarios, config, risk_by_clip, panel = small_study
        dataset = build_dataset(scenarios, risk_by_clip, panel, config)
        dataset.validate()
        labels = dataset.labels_of(dataset.train_true)
        counts = {c: int((labels == c).sum()) for c in set(labels.tolist())}
        assert len(set(counts.values())) == 1   # balanced true training side
        assert dataset.test_true.size > 0

    def test_test_side_not_augmented_by_default(self, small_study):
        scenarios, config, risk_by_clip, panel = small_study
        dataset = build_dataset(scenarios, risk_by_clip, panel, config)
        for i in dataset.test_true:
            assert dataset.windows[i].raw_dist is not None   # real windows only

    def test_augment_test_flag(self, small_study):
        scenarios, config, risk_by_clip, panel = small_study
        from dataclasses import replace
        cfg = StudyConfig(train=config.train, augment_test=True)
        dataset = build_dataset(scenarios, risk_by_clip, panel, cfg)
        labels = dataset.labels_of(dataset.test_true)
        counts = {c: int((labels == c).sum()) for c in set(labels.tolist())}
        assert len(set(counts.values())) == 1


class TestCompareModels:
    def test_accepts_custom_vector_producers(self, small_study):
        scenarios, config, _, panel = small_study
        def zero_model(frame):
            return np.zeros(40)
        results = compare_models(scenarios, panel, config,
                                 models={"dspr": "dspr", "flat": zero_model})
        assert set(results) == {"dspr", "flat"}
        # Constant features cannot beat the true risk features on labels
        # that quantize the risk aggregate.
        assert results["dspr"].metrics.accuracy >= results["flat"].metrics.accuracy

    def test_identical_models_identical_metrics(self, small_study):
        scenarios, config, _, panel = small_study
        results = compare_models(scenarios, panel, config,
                                 models={"a": "ttc", "b": "ttc"})
        ma, mb = results["a"].metrics, results["b"].metrics
        assert ma.accuracy == mb.accuracy
        assert (ma.confusion == mb.confusion).all()

    def test_empty_model_list_rejected(self, small_study):
        scenarios, config, _, panel = small_study
        with pytest.raises(ValueError):
            compare_models(scenarios, panel, config, models={})


class TestStudyDeterminism:
    def test_same_seeds_identical_audit(self, small_study):
        scenarios, config, _, panel = small_study
        a = run_study(scenarios, panel, config, with_baseline=True)
        b = run_study(scenarios, panel, config, with_baseline=True)
        assert json.dumps(a.selftrain.audit, sort_keys=True) \
            == json.dumps(b.selftrain.audit, sort_keys=True)
        assert a.baseline.accuracy == b.baseline.accuracy

    def test_threaded_risk_rows_match_serial(self, small_study):
        scenarios, config, serial, _ = small_study
        threaded = risk_rows_batch(scenarios, config.params, threads=3)
        for a, b in zip(serial, threaded):
            assert (a == b).all()

    def test_callable_model_shape_enforced(self, small_study):
        scenarios, config, _, _ = small_study
        with pytest.raises(ValueError):
            risk_rows(scenarios[0], config.params, model=lambda f: np.zeros(7))
