"""Feature rows, sliding windows, label aggregation, splitting, and balancing.

A feature row is [vx, vy, ax, ay, heading, road_class, slot_0..slot_39]
(46 wide, road class kept as a single categorical code). Windows stack T
consecutive rows of one scenario and inherit the label decision of their
final frame.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .scene import N_SLOTS, Frame, RATING_MAX, RatingPanel

FEATURE_WIDTH = 6 + N_SLOTS   # 46
ROAD_COL = 5                  # index of the categorical road-class column
DEFAULT_WINDOW = 10           # frames per window (1 s at 10 Hz)
CLASS_LABELS = (1, 2, 3, 4)

CONTINUOUS_COLS = np.array([c for c in range(FEATURE_WIDTH) if c != ROAD_COL])

WINDOWS_FILE = "windows.bin"
INDEX_FILE = "index.csv"
_BIN_HEADER = struct.Struct("<III")  # count, T, width (little endian)


class DatasetError(ValueError):
    """Inconsistent dataset construction or storage."""


@dataclass(frozen=True)
class ClassThresholds:
    """Per-class agreement thresholds gating 'true' labels."""

    p_true: dict[int, float] = field(
        default_factory=lambda: {1: 0.9, 2: 0.75, 3: 0.65, 4: 0.6})

    def __post_init__(self):
        if set(self.p_true) != set(CLASS_LABELS):
            raise DatasetError(f"thresholds must cover classes {CLASS_LABELS}")
        for r, p in self.p_true.items():
            if not 0.0 < p <= 1.0:
                raise DatasetError(f"p_true[{r}]={p} outside (0, 1]")


@dataclass
class FeatureWindow:
    """T consecutive feature rows of one scenario plus label bookkeeping.

    `label` is the consistency-filtered class (None when the panel disagreed
    at the window's final frame), `raw_label` the unfiltered majority vote,
    and `provenance` records whether a label is an observed 'true' label or
    a self-training 'pseudo' label.
    """

    data: np.ndarray          # (T, FEATURE_WIDTH)
    source_id: str
    end_time: float
    label: int | None = None
    raw_label: int | None = None
    provenance: str = ""      # "true", "pseudo", or "" when unlabeled
    # Rating distribution over classes 1..4 at the end frame (fractions of
    # the panel voting each level); carried in memory for raw-label studies,
    # not persisted in the dataset directory.
    raw_dist: np.ndarray | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != FEATURE_WIDTH:
            raise DatasetError(f"window must be (T, {FEATURE_WIDTH})")


def feature_frame(frame: Frame, risk_values: np.ndarray) -> np.ndarray:
    """Concatenate ego kinematics, road class, and the 40-slot risk row."""
    risk_values = np.asarray(risk_values, dtype=float)
    if risk_values.shape != (N_SLOTS,):
        raise DatasetError(f"risk row must have {N_SLOTS} entries")
    row = np.empty(FEATURE_WIDTH)
    row[0:2] = frame.ego.velocity
    row[2:4] = frame.ego.acceleration
    row[4] = frame.ego.heading
    row[ROAD_COL] = frame.road_condition
    row[6:] = risk_values
    return row


def feature_windows(rows: np.ndarray, window: int, source_id: str,
                    timestamps: np.ndarray,
                    labels=None, raw_labels=None,
                    raw_dists=None) -> list[FeatureWindow]:
    """Sliding windows of `window` consecutive rows, one per end frame.

    A scenario with n rows yields n - window + 1 windows (none when shorter
    than the window). Labels, when given, are per-frame decisions and attach
    at each window's final frame.
    """
    if window < 1:
        raise DatasetError("window length must be >= 1")
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[0]
    out: list[FeatureWindow] = []
    for end in range(window - 1, n):
        label = labels[end] if labels is not None else None
        raw = raw_labels[end] if raw_labels is not None else None
        dist = raw_dists[end] if raw_dists is not None else None
        out.append(FeatureWindow(
            data=rows[end - window + 1:end + 1].copy(),
            source_id=source_id,
            end_time=float(timestamps[end]),
            label=None if label is None else int(label),
            raw_label=None if raw is None else int(raw),
            provenance="true" if label is not None else "",
            raw_dist=None if dist is None else np.asarray(dist, dtype=float),
        ))
    return out


# ---------------------------------------------------------------------------
# Label aggregation
# ---------------------------------------------------------------------------

def _rating_counts(panel: RatingPanel) -> np.ndarray:
    """(frames, 4) count matrix of ratings 1..4 per column."""
    ratings = panel.ratings
    if ratings.size and ratings.max() > RATING_MAX:
        raise DatasetError("panel must be validated (ratings 1..4) before filtering")
    counts = np.zeros((panel.n_frames, len(CLASS_LABELS)), dtype=int)
    for r in CLASS_LABELS:
        counts[:, r - 1] = (ratings == r).sum(axis=0)
    return counts


def consistency_filter(panel: RatingPanel,
                       thresholds: ClassThresholds | None = None) -> list[int | None]:
    """Per-frame label decisions from rater agreement.

    A frame gets the majority rating as a true label when the agreement
    fraction reaches that rating's threshold; ties for the majority, or
    agreement below threshold, leave the frame unlabeled (None).
    """
    thresholds = thresholds or ClassThresholds()
    n = panel.n_participants
    if n == 0:
        raise DatasetError("panel has no participants")
    decisions: list[int | None] = []
    for counts in _rating_counts(panel):
        top = counts.max()
        if (counts == top).sum() > 1:
            decisions.append(None)
            continue
        r_star = int(counts.argmax()) + 1
        p = top / n
        decisions.append(r_star if p >= thresholds.p_true[r_star] else None)
    return decisions


def raw_labels(panel: RatingPanel) -> list[int]:
    """Unfiltered per-frame majority vote; ties break to the lower rating."""
    if panel.n_participants == 0:
        raise DatasetError("panel has no participants")
    return [int(counts.argmax()) + 1 for counts in _rating_counts(panel)]


def rating_distribution(panel: RatingPanel) -> np.ndarray:
    """(frames, 4) fraction of the panel voting each level per frame."""
    if panel.n_participants == 0:
        raise DatasetError("panel has no participants")
    return _rating_counts(panel) / panel.n_participants


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

@dataclass
class LabeledDataset:
    """All windows plus disjoint train/test true/unlabeled index partitions."""

    windows: list[FeatureWindow]
    train_true: np.ndarray
    train_unlabeled: np.ndarray
    test_true: np.ndarray
    test_unlabeled: np.ndarray
    split_ratio: float
    seed: int

    def partitions(self) -> dict[str, np.ndarray]:
        return {
            "train_true": self.train_true,
            "train_unlabeled": self.train_unlabeled,
            "test_true": self.test_true,
            "test_unlabeled": self.test_unlabeled,
        }

    def labels_of(self, indices) -> np.ndarray:
        return np.array([self.windows[i].label for i in indices], dtype=int)

    def raw_labels_of(self, indices) -> np.ndarray:
        return np.array(
            [-1 if self.windows[i].raw_label is None else self.windows[i].raw_label
             for i in indices], dtype=int)

    def tensor(self, indices) -> np.ndarray:
        return np.stack([self.windows[i].data for i in indices])

    def validate(self) -> None:
        parts = list(self.partitions().values())
        total = np.concatenate(parts) if parts else np.array([], dtype=int)
        if len(np.unique(total)) != len(total) or len(total) != len(self.windows):
            raise DatasetError("partitions must be disjoint and cover all windows")
        for name in ("train_true", "test_true"):
            for i in getattr(self, name):
                if self.windows[i].label is None:
                    raise DatasetError(f"unlabeled window {i} in {name}")
        for name in ("train_unlabeled", "test_unlabeled"):
            for i in getattr(self, name):
                if self.windows[i].label is not None:
                    raise DatasetError(f"labeled window {i} in {name}")


def split_dataset(windows: list[FeatureWindow], s: float, seed: int) -> LabeledDataset:
    """Seeded train/test split at scenario-clip granularity.

    Whole clips are drawn into the train side until it holds at least a
    fraction `s` of all windows (at least one clip always remains in test),
    then each side is partitioned by label presence. Splitting by clip keeps
    overlapping windows of one scenario on one side.
    """
    if not 0.0 < s < 1.0:
        raise DatasetError(f"split ratio {s} outside (0, 1)")
    clip_ids = sorted({w.source_id for w in windows})
    if len(clip_ids) < 2:
        raise DatasetError("need at least 2 scenario clips to split")

    rng = np.random.default_rng(seed)
    order = [clip_ids[i] for i in rng.permutation(len(clip_ids))]
    by_clip = {cid: [i for i, w in enumerate(windows) if w.source_id == cid]
               for cid in clip_ids}

    target = s * len(windows)
    train_clips: set[str] = set()
    count = 0
    for cid in order:
        if count >= target or len(train_clips) == len(clip_ids) - 1:
            break
        train_clips.add(cid)
        count += len(by_clip[cid])

    def part(pred) -> np.ndarray:
        return np.array([i for i, w in enumerate(windows) if pred(i, w)], dtype=int)

    in_train = lambda w: w.source_id in train_clips
    ds = LabeledDataset(
        windows=windows,
        train_true=part(lambda i, w: in_train(w) and w.label is not None),
        train_unlabeled=part(lambda i, w: in_train(w) and w.label is None),
        test_true=part(lambda i, w: not in_train(w) and w.label is not None),
        test_unlabeled=part(lambda i, w: not in_train(w) and w.label is None),
        split_ratio=s,
        seed=seed,
    )
    ds.validate()
    return ds


# ---------------------------------------------------------------------------
# SMOTE-NC balancing
# ---------------------------------------------------------------------------

def _flat_continuous(windows: list[FeatureWindow]) -> np.ndarray:
    return np.stack([w.data[:, CONTINUOUS_COLS].ravel() for w in windows])


def smote_nc(windows: list[FeatureWindow], k: int = 5,
             seed: int = 0) -> list[FeatureWindow]:
    """Oversample each minority class to the majority count.

    Synthetic windows interpolate continuous features between a class sample
    and one of its k nearest same-class neighbours (Euclidean on the
    flattened continuous features) at a uniform random fraction; each
    categorical road-class entry takes the mode of the neighbours' values.
    Single-sample classes fall back to duplication with tiny jitter.
    """
    if not windows:
        raise DatasetError("cannot balance an empty set")
    labels = [w.label for w in windows]
    if any(l is None for l in labels):
        raise DatasetError("all windows must be labeled before balancing")

    by_class: dict[int, list[int]] = {}
    for i, l in enumerate(labels):
        by_class.setdefault(int(l), []).append(i)
    majority = max(len(v) for v in by_class.values())
    if all(len(v) == majority for v in by_class.values()):
        return list(windows)

    rng = np.random.default_rng(seed)
    out = list(windows)
    for cls in sorted(by_class):
        members = by_class[cls]
        need = majority - len(members)
        if need == 0:
            continue
        if len(members) == 1:
            base = windows[members[0]]
            for _ in range(need):
                data = base.data.copy()
                data[:, CONTINUOUS_COLS] += rng.normal(0.0, 1e-6,
                                                       size=(data.shape[0],
                                                             len(CONTINUOUS_COLS)))
                out.append(replace(base, data=data, raw_label=None))
            continue

        class_windows = [windows[i] for i in members]
        flat = _flat_continuous(class_windows)
        k_eff = min(k, len(members) - 1)
        # Pairwise distances within the class; self excluded via the diagonal.
        d2 = ((flat[:, None, :] - flat[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        neighbours = np.argsort(d2, axis=1)[:, :k_eff]

        for _ in range(need):
            b = int(rng.integers(len(members)))
            nbrs = neighbours[b]
            n = int(nbrs[rng.integers(k_eff)])
            lam = float(rng.uniform())
            base = class_windows[b]
            other = class_windows[n]
            data = base.data.copy()
            data[:, CONTINUOUS_COLS] = (
                (1.0 - lam) * base.data[:, CONTINUOUS_COLS]
                + lam * other.data[:, CONTINUOUS_COLS])
            # Road class per row: mode over the k nearest neighbours, ties to
            # the smallest code.
            nbr_codes = np.stack([class_windows[int(j)].data[:, ROAD_COL]
                                  for j in nbrs]).astype(int)
            for row in range(data.shape[0]):
                vals, counts = np.unique(nbr_codes[:, row], return_counts=True)
                data[row, ROAD_COL] = vals[counts.argmax()]
            out.append(replace(base, data=data, raw_label=None))
    return out


# ---------------------------------------------------------------------------
# Dataset directory format: flat float32 tensor + index CSV
# ---------------------------------------------------------------------------

def save_dataset(directory, dataset: LabeledDataset) -> None:
    """Persist windows as a little-endian float32 tensor plus an index CSV."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    windows = dataset.windows
    count = len(windows)
    t = windows[0].data.shape[0] if count else DEFAULT_WINDOW

    with (directory / WINDOWS_FILE).open("wb") as fh:
        fh.write(_BIN_HEADER.pack(count, t, FEATURE_WIDTH))
        for w in windows:
            if w.data.shape[0] != t:
                raise DatasetError("all windows must share one length")
            fh.write(w.data.astype("<f4").tobytes())

    partition_of = {}
    for name, indices in dataset.partitions().items():
        for i in indices:
            partition_of[int(i)] = name

    with (directory / INDEX_FILE).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "source", "end_timestamp", "label",
                         "raw_label", "provenance", "partition"])
        for i, w in enumerate(windows):
            writer.writerow([
                i, w.source_id, repr(w.end_time),
                "" if w.label is None else w.label,
                "" if w.raw_label is None else w.raw_label,
                w.provenance, partition_of.get(i, ""),
            ])


def load_dataset(directory) -> LabeledDataset:
    directory = Path(directory)
    with (directory / WINDOWS_FILE).open("rb") as fh:
        header = fh.read(_BIN_HEADER.size)
        count, t, width = _BIN_HEADER.unpack(header)
        if width != FEATURE_WIDTH:
            raise DatasetError(f"unexpected feature width {width}")
        payload = np.frombuffer(fh.read(), dtype="<f4")
    if payload.size != count * t * width:
        raise DatasetError("tensor payload does not match header")
    tensor = payload.reshape(count, t, width).astype(float)

    windows: list[FeatureWindow] = []
    parts: dict[str, list[int]] = {name: [] for name in
                                   ("train_true", "train_unlabeled",
                                    "test_true", "test_unlabeled")}
    with (directory / INDEX_FILE).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            i = int(row["index"])
            label = int(row["label"]) if row["label"] else None
            raw = int(row["raw_label"]) if row.get("raw_label") else None
            windows.append(FeatureWindow(
                data=tensor[i], source_id=row["source"],
                end_time=float(row["end_timestamp"]),
                label=label, raw_label=raw, provenance=row["provenance"],
            ))
            if row["partition"]:
                parts[row["partition"]].append(i)
    if len(windows) != count:
        raise DatasetError("index rows do not match tensor count")
    return LabeledDataset(
        windows=windows,
        train_true=np.array(parts["train_true"], dtype=int),
        train_unlabeled=np.array(parts["train_unlabeled"], dtype=int),
        test_true=np.array(parts["test_true"], dtype=int),
        test_unlabeled=np.array(parts["test_unlabeled"], dtype=int),
        split_ratio=float("nan"),
        seed=-1,
    )
