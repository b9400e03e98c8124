"""End-to-end study orchestration: risk, features, labels, training, comparison.

These helpers snap the modules together the way the CLI (and the studies in
the test suite) run them: compute per-frame risk rows for a scenario batch,
slice a combined rating panel, build labeled windows, split, balance, and
drive supervised or self-trained models with shared seeds so different risk
models stay comparable.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import (
    ClassThresholds,
    DEFAULT_WINDOW,
    FeatureWindow,
    LabeledDataset,
    consistency_filter,
    feature_frame,
    feature_windows,
    rating_distribution,
    raw_labels,
    smote_nc,
    split_dataset,
)
from .learning import (
    ClassifierContract,
    Metrics,
    ReferenceClassifier,
    SelfTrainConfig,
    SelfTrainResult,
    TrainConfig,
    metrics_from_predictions,
    self_train,
)
from .risk import DsprParams, RiskBreakdown, risk_vector
from .scene import RatingPanel, Scenario, validate_panel
from .synthetic import default_profiles, simulate_raters
from .ttc import inverse_ttc_vector


@dataclass
class StudyConfig:
    """Everything a reproducible study run needs."""

    params: DsprParams = field(default_factory=DsprParams)
    thresholds: ClassThresholds = field(default_factory=ClassThresholds)
    window: int = DEFAULT_WINDOW
    split_ratio: float = 0.7
    smote_k: int = 5
    augment_train: bool = True
    augment_test: bool = False
    selftrain: SelfTrainConfig = field(default_factory=SelfTrainConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    split_seed: int = 11
    smote_seed: int = 12
    ttc_cap: float = 10.0


def risk_rows(scenario: Scenario, params: DsprParams,
              model="dspr", ttc_cap: float = 10.0,
              ) -> tuple[np.ndarray, list[list[RiskBreakdown]]]:
    """Per-frame 40-slot rows for one scenario.

    `model` is "dspr", "ttc", or any callable mapping a frame to a 40-wide
    vector, so external per-object risk models can reuse the whole pipeline.
    """
    rows = np.zeros((len(scenario.frames), 40))
    breakdowns: list[list[RiskBreakdown]] = []
    for i, frame in enumerate(scenario.frames):
        if model == "dspr":
            vec, bks = risk_vector(frame, params)
            rows[i] = vec.values
            breakdowns.append(bks)
        elif model == "ttc":
            rows[i] = inverse_ttc_vector(frame, cap=ttc_cap,
                                         d_min=params.d_min).values
            breakdowns.append([])
        elif callable(model):
            rows[i] = np.asarray(model(frame), dtype=float).reshape(40)
            breakdowns.append([])
        else:
            raise ValueError(f"unknown risk model {model!r}")
    return rows, breakdowns


def _risk_rows_task(args):
    scenario, params, model, ttc_cap = args
    return risk_rows(scenario, params, model, ttc_cap)[0]


def risk_rows_batch(scenarios: list[Scenario], params: DsprParams,
                    model="dspr", ttc_cap: float = 10.0,
                    threads: int = 1) -> list[np.ndarray]:
    """Risk rows for every scenario, optionally across a worker pool.

    Results come back in scenario order regardless of worker count, so the
    downstream artifacts do not depend on scheduling. Callable models run
    in-process (they may not survive pickling into workers).
    """
    tasks = [(s, params, model, ttc_cap) for s in scenarios]
    if threads <= 1 or len(scenarios) <= 1 or callable(model):
        return [_risk_rows_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_risk_rows_task, tasks))


def slice_panel(panel: RatingPanel, scenarios: list[Scenario]) -> list[RatingPanel]:
    """Split a combined panel (columns spanning concatenated clips) into
    per-scenario panels in the given scenario order."""
    total = sum(len(s.frames) for s in scenarios)
    if panel.n_frames != total:
        raise ValueError(
            f"panel has {panel.n_frames} columns, scenarios total {total} frames")
    out = []
    offset = 0
    for s in scenarios:
        n = len(s.frames)
        out.append(RatingPanel(scenario_id=s.id,
                               ratings=panel.ratings[:, offset:offset + n]))
        offset += n
    return out


def simulate_panels(scenarios: list[Scenario], risk_by_clip: list[np.ndarray],
                    profiles=None, seed: int = 0) -> RatingPanel:
    """Combined rating panel over the concatenated clips."""
    profiles = profiles if profiles is not None else default_profiles()
    blocks = []
    for i, (scenario, rows) in enumerate(zip(scenarios, risk_by_clip)):
        panel = simulate_raters(rows, profiles, seed=seed + i,
                                scenario_id=scenario.id)
        blocks.append(panel.ratings)
    return RatingPanel(scenario_id="suite",
                       ratings=np.concatenate(blocks, axis=1))


def build_windows(scenario: Scenario, rows: np.ndarray,
                  panel: RatingPanel | None, thresholds: ClassThresholds,
                  window: int) -> list[FeatureWindow]:
    """Feature windows for one scenario, labeled when a panel is supplied."""
    features = np.stack([feature_frame(f, rows[i])
                         for i, f in enumerate(scenario.frames)])
    labels = raw = dists = None
    if panel is not None:
        panel = validate_panel(panel, scenario)
        labels = consistency_filter(panel, thresholds)
        raw = raw_labels(panel)
        dists = rating_distribution(panel)
    return feature_windows(features, window, scenario.id,
                           scenario.timestamps, labels, raw, dists)


def build_dataset(scenarios: list[Scenario], risk_by_clip: list[np.ndarray],
                  panel: RatingPanel, config: StudyConfig,
                  threads: int = 1) -> LabeledDataset:
    """Windows for every clip, split into train/test true/unlabeled parts,
    with the true training side (and optionally the true test side)
    rebalanced in place."""
    panels = slice_panel(panel, scenarios)
    windows: list[FeatureWindow] = []
    for scenario, rows, clip_panel in zip(scenarios, risk_by_clip, panels):
        windows.extend(build_windows(scenario, rows, clip_panel,
                                     config.thresholds, config.window))
    dataset = split_dataset(windows, config.split_ratio, config.split_seed)
    if config.augment_train:
        dataset = augment_partition(dataset, "train_true",
                                    config.smote_k, config.smote_seed)
    if config.augment_test:
        dataset = augment_partition(dataset, "test_true",
                                    config.smote_k, config.smote_seed + 1)
    return dataset


def augment_partition(dataset: LabeledDataset, partition: str,
                      k: int, seed: int) -> LabeledDataset:
    """Balance one true partition with synthetic windows appended at the end."""
    indices = getattr(dataset, partition)
    if indices.size == 0:
        return dataset
    originals = [dataset.windows[i] for i in indices]
    balanced = smote_nc(originals, k=k, seed=seed)
    synthetic = balanced[len(originals):]
    if not synthetic:
        return dataset
    start = len(dataset.windows)
    dataset.windows.extend(synthetic)
    new_idx = np.concatenate([indices,
                              np.arange(start, start + len(synthetic))])
    setattr(dataset, partition, new_idx)
    dataset.validate()
    return dataset


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------

@dataclass
class RawBaseline:
    """Supervised-on-raw-labels reference point.

    The model is fit on every training window against the panel's full vote
    distribution (equivalent to training on one sample per participant), and
    accuracy is the expected agreement between its hard prediction and a
    participant drawn from the test-side panel; no consistency filtering and
    no label reconstruction anywhere.
    """

    accuracy: float
    n: int
    majority_metrics: Metrics | None = None


@dataclass
class StudyResult:
    dataset: LabeledDataset
    selftrain: SelfTrainResult
    baseline: RawBaseline | None

    @property
    def metrics(self) -> Metrics:
        return self.selftrain.metrics


def supervised_raw_baseline(dataset: LabeledDataset,
                            config: TrainConfig | None = None) -> RawBaseline | None:
    """Train on un-reconstructed labels and score against them."""
    from .learning import predict_proba as model_predict

    train_idx = np.concatenate([dataset.train_true, dataset.train_unlabeled])
    train_idx = np.array([i for i in train_idx
                          if dataset.windows[i].raw_dist is not None], dtype=int)
    test_idx = np.concatenate([dataset.test_true, dataset.test_unlabeled])
    test_idx = np.array([i for i in test_idx
                         if dataset.windows[i].raw_dist is not None], dtype=int)
    if train_idx.size == 0 or test_idx.size == 0:
        return None

    from .learning import train_reference
    train_dist = np.stack([dataset.windows[i].raw_dist for i in train_idx])
    model = train_reference(dataset.tensor(train_idx), train_dist, config)

    probs = model_predict(model, dataset.tensor(test_idx))
    pred_col = probs.argmax(axis=1)
    test_dist = np.stack([dataset.windows[i].raw_dist for i in test_idx])
    accuracy = float(test_dist[np.arange(test_idx.size), pred_col].mean())

    majority = metrics_from_predictions(dataset.raw_labels_of(test_idx), probs)
    return RawBaseline(accuracy=accuracy, n=int(test_idx.size),
                       majority_metrics=majority)


def run_study(scenarios: list[Scenario], panel: RatingPanel,
              config: StudyConfig, classifier: ClassifierContract | None = None,
              model: str = "dspr", threads: int = 1,
              with_baseline: bool = True) -> StudyResult:
    """Full pipeline for one risk model: features, labels, split, balance,
    self-train, and (optionally) the supervised raw-label baseline."""
    classifier = classifier or ReferenceClassifier(config.train)
    risk_by_clip = risk_rows_batch(scenarios, config.params, model=model,
                                   ttc_cap=config.ttc_cap, threads=threads)
    dataset = build_dataset(scenarios, risk_by_clip, panel, config,
                            threads=threads)
    baseline = (supervised_raw_baseline(dataset, config.train)
                if with_baseline else None)
    result = self_train(dataset, classifier, config.selftrain)
    if baseline is not None:
        result.audit["baseline_raw_accuracy"] = baseline.accuracy
    return StudyResult(dataset=dataset, selftrain=result, baseline=baseline)


def compare_models(scenarios: list[Scenario], panel: RatingPanel,
                   config: StudyConfig, models=None,
                   threads: int = 1) -> dict[str, StudyResult]:
    """Run the identical pipeline once per risk model with shared seeds.

    `models` is a list of built-in names or a mapping of name to per-frame
    vector producer (name or callable); every entry sees the same panel,
    split, balancing, and training seeds.
    """
    if models is None:
        models = ["dspr", "ttc"]
    if not isinstance(models, dict):
        models = {name: name for name in models}
    if not models:
        raise ValueError("need at least one risk model")
    return {name: run_study(scenarios, panel, config, model=producer,
                            threads=threads, with_baseline=False)
            for name, producer in models.items()}
