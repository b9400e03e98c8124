"""Classifier contract, reference classifier, metrics, and self-training.

The reference classifier is a multinomial softmax regression over the
flattened, standardized window (road class expanded to indicator inputs).
The self-training loop iteratively adopts high-confidence pseudo-labels from
the unlabeled training pool, then fits a final model on true plus adopted
windows and scores it on the consistency-filtered test set.
"""

from __future__ import annotations

import json
import struct
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .dataset import (
    CLASS_LABELS,
    CONTINUOUS_COLS,
    FEATURE_WIDTH,
    ROAD_COL,
    DatasetError,
    LabeledDataset,
)
from .scene import N_ROAD_CLASSES

SIMPLEX_TOL = 1e-6

MODEL_MAGIC = b"RISKMDL1"
MODEL_SCHEMA = 1


class LearningError(RuntimeError):
    """Classifier or loop failure."""


def check_simplex(probs: np.ndarray) -> np.ndarray:
    """Validate that every row is a probability vector over the 4 classes."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2 or probs.shape[1] != len(CLASS_LABELS):
        raise LearningError(f"probabilities must be (n, {len(CLASS_LABELS)})")
    if not np.all(np.isfinite(probs)) or (probs < 0).any():
        raise LearningError("probabilities must be finite and nonnegative")
    if np.abs(probs.sum(axis=1) - 1.0).max() > SIMPLEX_TOL:
        raise LearningError("probability rows must sum to 1")
    return probs


# ---------------------------------------------------------------------------
# Feature expansion and standardization
# ---------------------------------------------------------------------------

def expand_windows(tensor: np.ndarray) -> np.ndarray:
    """Flatten (n, T, 46) windows to (n, T*51): continuous features pass
    through, the road-class code becomes 6 indicator columns per timestep."""
    tensor = np.asarray(tensor, dtype=float)
    n, t, width = tensor.shape
    if width != FEATURE_WIDTH:
        raise DatasetError(f"expected width {FEATURE_WIDTH}, got {width}")
    cont = tensor[:, :, CONTINUOUS_COLS]
    codes = tensor[:, :, ROAD_COL].astype(int)
    onehot = np.zeros((n, t, N_ROAD_CLASSES))
    valid = (codes >= 1) & (codes <= N_ROAD_CLASSES)
    idx = np.where(valid)
    onehot[idx[0], idx[1], codes[idx] - 1] = 1.0
    return np.concatenate([cont, onehot], axis=2).reshape(n, -1)


def continuous_mask(t: int) -> np.ndarray:
    """Boolean mask of the continuous positions in an expanded row."""
    per_step = np.concatenate([
        np.ones(len(CONTINUOUS_COLS), dtype=bool),
        np.zeros(N_ROAD_CLASSES, dtype=bool),
    ])
    return np.tile(per_step, t)


@dataclass
class SoftmaxModel:
    """Trained multinomial regression plus its standardization statistics."""

    window: int
    class_labels: tuple[int, ...]
    mean: np.ndarray      # per expanded column; 0 for indicator columns
    std: np.ndarray       # per expanded column; 1 for indicator columns
    weights: np.ndarray   # (classes, expanded + 1), last column is the bias

    def transform(self, tensor: np.ndarray) -> np.ndarray:
        x = expand_windows(tensor)
        x = (x - self.mean) / self.std
        return np.hstack([x, np.ones((x.shape[0], 1))])


@dataclass(frozen=True)
class TrainConfig:
    """Reference-classifier settings: full-batch gradient descent with
    classical (heavy-ball) momentum; zero-initialized, so deterministic."""

    learning_rate: float = 0.3
    momentum: float = 0.9
    max_epochs: int = 1500
    l2: float = 1e-4
    grad_tol: float = 1e-6
    seed: int = 0


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss_grad(weights: np.ndarray, x1: np.ndarray, y_onehot: np.ndarray,
                      l2: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy (hard or soft targets) with L2 on non-bias weights,
    plus its gradient."""
    n = x1.shape[0]
    probs = _softmax(x1 @ weights.T)
    eps = 1e-12
    loss = float(-(y_onehot * np.log(np.clip(probs, eps, None))).sum() / n)
    reg = weights.copy()
    reg[:, -1] = 0.0
    loss += 0.5 * l2 * float((reg * reg).sum())
    grad = (probs - y_onehot).T @ x1 / n + l2 * reg
    return loss, grad


class ClassifierContract(Protocol):
    """Anything that can train on labeled windows and emit class probabilities."""

    def train(self, dataset: LabeledDataset, indices: np.ndarray,
              labels: np.ndarray, seed: int): ...

    def predict_proba(self, model, dataset: LabeledDataset,
                      indices: np.ndarray) -> np.ndarray: ...


class ReferenceClassifier:
    """Deterministic softmax-regression classifier behind the contract."""

    def __init__(self, config: TrainConfig | None = None):
        self.config = config or TrainConfig()

    def train(self, dataset: LabeledDataset, indices: np.ndarray,
              labels: np.ndarray, seed: int = 0) -> SoftmaxModel:
        indices = np.asarray(indices, dtype=int)
        if indices.size == 0:
            raise LearningError("empty training set")
        tensor = dataset.tensor(indices)
        labels = np.asarray(labels, dtype=int)
        return train_reference(tensor, labels, self.config)

    def predict_proba(self, model: SoftmaxModel, dataset: LabeledDataset,
                      indices: np.ndarray) -> np.ndarray:
        tensor = dataset.tensor(np.asarray(indices, dtype=int))
        return predict_proba(model, tensor)


def train_reference(tensor: np.ndarray, labels: np.ndarray,
                    config: TrainConfig | None = None) -> SoftmaxModel:
    """Fit the softmax regression on (n, T, 46) windows.

    `labels` may be hard class labels in 1..4 or an (n, 4) matrix of target
    distributions (soft labels, e.g. a rater panel's vote fractions).
    Standardization statistics come from this training set and ship with the
    model; optimization starts from zero weights, so identical inputs give
    identical parameters.
    """
    config = config or TrainConfig()
    tensor = np.asarray(tensor, dtype=float)
    labels = np.asarray(labels)
    if tensor.shape[0] == 0:
        raise LearningError("empty training set")
    if tensor.shape[0] != labels.shape[0]:
        raise LearningError("window/label count mismatch")

    t = tensor.shape[1]
    x = expand_windows(tensor)
    mask = continuous_mask(t)
    mean = np.zeros(x.shape[1])
    std = np.ones(x.shape[1])
    mean[mask] = x[:, mask].mean(axis=0)
    sd = x[:, mask].std(axis=0)
    sd[sd < 1e-12] = 1.0
    std[mask] = sd
    xs = (x - mean) / std
    x1 = np.hstack([xs, np.ones((xs.shape[0], 1))])

    if labels.ndim == 2:
        y_onehot = check_simplex(labels)
    else:
        labels = labels.astype(int)
        y_onehot = np.zeros((labels.shape[0], len(CLASS_LABELS)))
        for j, cls in enumerate(CLASS_LABELS):
            y_onehot[labels == cls, j] = 1.0
        if not np.all(y_onehot.sum(axis=1) == 1.0):
            raise LearningError(f"labels must lie in {CLASS_LABELS}")

    weights = np.zeros((len(CLASS_LABELS), x1.shape[1]))
    velocity = np.zeros_like(weights)
    for _ in range(config.max_epochs):
        _, grad = softmax_loss_grad(weights, x1, y_onehot, config.l2)
        velocity = config.momentum * velocity + grad
        weights -= config.learning_rate * velocity
        if np.abs(grad).max() < config.grad_tol:
            break
    return SoftmaxModel(window=t, class_labels=CLASS_LABELS,
                        mean=mean, std=std, weights=weights)


def predict_proba(model: SoftmaxModel, tensor: np.ndarray) -> np.ndarray:
    x1 = model.transform(np.asarray(tensor, dtype=float))
    return check_simplex(_softmax(x1 @ model.weights.T))


# ---------------------------------------------------------------------------
# Model artifact: self-describing binary
# ---------------------------------------------------------------------------

def save_model(path, model: SoftmaxModel) -> None:
    """Persist a model: magic, schema, dims, then float64 arrays."""
    path = Path(path)
    k, d1 = model.weights.shape
    with path.open("wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<IIII", MODEL_SCHEMA, model.window, d1 - 1, k))
        fh.write(struct.pack(f"<{k}I", *model.class_labels))
        fh.write(model.mean.astype("<f8").tobytes())
        fh.write(model.std.astype("<f8").tobytes())
        fh.write(model.weights.astype("<f8").tobytes())


def load_model(path) -> SoftmaxModel:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != MODEL_MAGIC:
        raise LearningError(f"{path.name}: not a model artifact")
    schema, window, d, k = struct.unpack_from("<IIII", raw, 8)
    if schema != MODEL_SCHEMA:
        raise LearningError(f"unsupported model schema {schema}")
    off = 8 + 16
    labels = struct.unpack_from(f"<{k}I", raw, off)
    off += 4 * k
    mean = np.frombuffer(raw, dtype="<f8", count=d, offset=off).copy()
    off += 8 * d
    std = np.frombuffer(raw, dtype="<f8", count=d, offset=off).copy()
    off += 8 * d
    weights = np.frombuffer(raw, dtype="<f8", count=k * (d + 1),
                            offset=off).reshape(k, d + 1).copy()
    return SoftmaxModel(window=window, class_labels=tuple(labels),
                        mean=mean, std=std, weights=weights)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass
class Metrics:
    """Accuracy, per-class and macro P/R/F1, one-vs-rest AUC, confusion."""

    accuracy: float
    confusion: np.ndarray                     # (4, 4), rows = true class
    per_class: dict[int, dict[str, float]]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    auc_per_class: dict[int, float]
    macro_auc: float | None
    n: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "macro_auc": self.macro_auc,
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "auc_per_class": {str(k): v for k, v in self.auc_per_class.items()},
            "confusion": self.confusion.tolist(),
        }


def auc_ovr(y_binary: np.ndarray, scores: np.ndarray) -> float | None:
    """Rank-based ROC AUC with midranks for ties; None when degenerate."""
    y_binary = np.asarray(y_binary, dtype=bool)
    n_pos = int(y_binary.sum())
    n_neg = int((~y_binary).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_rank_sum = ranks[y_binary].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def metrics_from_predictions(y_true: np.ndarray, probs: np.ndarray) -> Metrics:
    """Score hard predictions (argmax of probs) against true labels 1..4."""
    probs = check_simplex(probs)
    y_true = np.asarray(y_true, dtype=int)
    if y_true.shape[0] != probs.shape[0]:
        raise LearningError("label/probability count mismatch")
    if y_true.shape[0] == 0:
        raise LearningError("empty evaluation set")
    y_pred = np.asarray(CLASS_LABELS)[probs.argmax(axis=1)]

    k = len(CLASS_LABELS)
    confusion = np.zeros((k, k), dtype=int)
    for t, p in zip(y_true, y_pred):
        confusion[t - 1, p - 1] += 1
    accuracy = float(np.trace(confusion)) / len(y_true)

    per_class: dict[int, dict[str, float]] = {}
    present = []
    for j, cls in enumerate(CLASS_LABELS):
        tp = confusion[j, j]
        fp = confusion[:, j].sum() - tp
        fn = confusion[j, :].sum() - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per_class[cls] = {"precision": float(precision),
                          "recall": float(recall), "f1": float(f1)}
        if confusion[j, :].sum() > 0:
            present.append(cls)

    macro = lambda key: float(np.mean([per_class[c][key] for c in present]))
    auc_per_class: dict[int, float] = {}
    for j, cls in enumerate(CLASS_LABELS):
        auc = auc_ovr(y_true == cls, probs[:, j])
        if auc is not None:
            auc_per_class[cls] = auc
    macro_auc = (float(np.mean(list(auc_per_class.values())))
                 if auc_per_class else None)

    return Metrics(
        accuracy=accuracy, confusion=confusion, per_class=per_class,
        macro_precision=macro("precision"), macro_recall=macro("recall"),
        macro_f1=macro("f1"), auc_per_class=auc_per_class,
        macro_auc=macro_auc, n=len(y_true),
    )


def evaluate(classifier: ClassifierContract, model, dataset: LabeledDataset,
             indices: np.ndarray) -> Metrics:
    indices = np.asarray(indices, dtype=int)
    if indices.size == 0:
        raise LearningError("empty evaluation set")
    probs = check_simplex(classifier.predict_proba(model, dataset, indices))
    return metrics_from_predictions(dataset.labels_of(indices), probs)


# ---------------------------------------------------------------------------
# Self-training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelfTrainConfig:
    """Loop settings: adoption threshold, iteration count, residual policy."""

    epsilon: float = 0.9
    iterations: int = 5
    discard_residual: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")


@dataclass
class SelfTrainResult:
    model: object
    audit: dict
    metrics: Metrics | None


def self_train(dataset: LabeledDataset, classifier: ClassifierContract,
               cfg: SelfTrainConfig | None = None) -> SelfTrainResult:
    """Iterative pseudo-label adoption around a pluggable classifier.

    Each iteration trains on the true plus previously adopted windows,
    predicts the remaining unlabeled training pool, and adopts predictions
    whose confidence (maximum class probability) strictly exceeds epsilon.
    Residual unlabeled windows are discarded after the final iteration; the
    final model trains on true plus adopted windows and is scored on the
    consistency-filtered test split.
    """
    cfg = cfg or SelfTrainConfig()
    true_idx = np.asarray(dataset.train_true, dtype=int)
    if true_idx.size == 0:
        raise LearningError("train_true partition is empty")
    true_labels = dataset.labels_of(true_idx)

    unlabeled = list(np.asarray(dataset.train_unlabeled, dtype=int))
    pseudo_idx: list[int] = []
    pseudo_labels: list[int] = []
    iterations_log = []

    for iteration in range(1, cfg.iterations + 1):
        train_idx = np.concatenate([true_idx, np.array(pseudo_idx, dtype=int)])
        train_labels = np.concatenate([true_labels,
                                       np.array(pseudo_labels, dtype=int)])
        model = classifier.train(dataset, train_idx, train_labels, cfg.seed)

        adopted = 0
        adopted_per_class = {cls: 0 for cls in CLASS_LABELS}
        if unlabeled:
            pool = np.array(unlabeled, dtype=int)
            probs = check_simplex(classifier.predict_proba(model, dataset, pool))
            conf = probs.max(axis=1)
            take = conf > cfg.epsilon
            picked = np.asarray(CLASS_LABELS)[probs.argmax(axis=1)]
            for i, keep in enumerate(take):
                if keep:
                    pseudo_idx.append(int(pool[i]))
                    pseudo_labels.append(int(picked[i]))
                    adopted_per_class[int(picked[i])] += 1
            adopted = int(take.sum())
            unlabeled = [int(pool[i]) for i in range(len(pool)) if not take[i]]

        iterations_log.append({
            "iteration": iteration,
            "train_size": int(train_idx.size),
            "adopted": adopted,
            "adopted_per_class": adopted_per_class,
            "pseudo_total": len(pseudo_idx),
            "remaining_unlabeled": len(unlabeled),
        })

    final_idx = np.concatenate([true_idx, np.array(pseudo_idx, dtype=int)])
    final_labels = np.concatenate([true_labels, np.array(pseudo_labels, dtype=int)])
    final_model = classifier.train(dataset, final_idx, final_labels, cfg.seed)

    metrics = None
    test_idx = np.asarray(dataset.test_true, dtype=int)
    if test_idx.size:
        metrics = evaluate(classifier, final_model, dataset, test_idx)

    audit = {
        "epsilon": cfg.epsilon,
        "iterations": iterations_log,
        "final_train_size": int(final_idx.size),
        "pseudo_adopted": len(pseudo_idx),
        "discarded_unlabeled": len(unlabeled) if cfg.discard_residual else 0,
        "test_metrics": metrics.to_dict() if metrics else None,
    }
    return SelfTrainResult(model=final_model, audit=audit, metrics=metrics)


# ---------------------------------------------------------------------------
# External classifier over the file contract
# ---------------------------------------------------------------------------

class ExternalClassifier:
    """Drives an out-of-process classifier through the dataset-directory
    contract: a request manifest names training windows (with labels) and
    the windows to score; the external tool answers with one probability CSV
    per requested split.
    """

    def __init__(self, command: list[str], dataset_dir, workdir):
        self.command = list(command)
        self.dataset_dir = Path(dataset_dir)
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self._counter = 0

    def train(self, dataset: LabeledDataset, indices: np.ndarray,
              labels: np.ndarray, seed: int = 0) -> dict:
        return {"indices": [int(i) for i in indices],
                "labels": [int(l) for l in labels], "seed": int(seed)}

    def predict_proba(self, model: dict, dataset: LabeledDataset,
                      indices: np.ndarray) -> np.ndarray:
        self._counter += 1
        run_dir = self.workdir / f"request{self._counter:03d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        request = {
            "schema": 1,
            "dataset": str(self.dataset_dir),
            "seed": model["seed"],
            "train": {"indices": model["indices"], "labels": model["labels"]},
            "predict": {"query": [int(i) for i in indices]},
            "output_dir": str(run_dir),
        }
        request_path = run_dir / "request.json"
        request_path.write_text(json.dumps(request, indent=2))
        proc = subprocess.run(
            [*self.command, "--dataset", str(self.dataset_dir),
             "--request", str(request_path)],
            capture_output=True, text=True)
        if proc.returncode != 0:
            raise LearningError(
                f"external classifier failed ({proc.returncode}):\n{proc.stderr}")
        probs_path = run_dir / "probs_query.csv"
        if not probs_path.exists():
            raise LearningError(f"external classifier wrote no {probs_path.name}")
        return read_probability_file(probs_path, [int(i) for i in indices])


def read_probability_file(path, expected_indices: list[int]) -> np.ndarray:
    """Parse a probability CSV (index, p1..p4) covering the expected windows."""
    rows: dict[int, list[float]] = {}
    with Path(path).open() as fh:
        header = fh.readline().strip().split(",")
        if header[:1] != ["index"]:
            raise LearningError(f"{path}: expected header starting with 'index'")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 5:
                raise LearningError(f"{path}: malformed row {line!r}")
            rows[int(parts[0])] = [float(v) for v in parts[1:]]
    try:
        probs = np.array([rows[i] for i in expected_indices])
    except KeyError as exc:
        raise LearningError(f"{path}: missing probabilities for window {exc}")
    return check_simplex(probs)


def write_probability_file(path, indices, probs) -> None:
    probs = check_simplex(probs)
    with Path(path).open("w") as fh:
        fh.write("index,p1,p2,p3,p4\n")
        for i, row in zip(indices, probs):
            fh.write(f"{int(i)}," + ",".join(repr(float(v)) for v in row) + "\n")
