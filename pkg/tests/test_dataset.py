"""Feature rows, windows, label aggregation, split, balancing, and storage."""

import hashlib

import numpy as np
import pytest

from dspr.dataset import (
    CLASS_LABELS,
    CONTINUOUS_COLS,
    FEATURE_WIDTH,
    ROAD_COL,
    ClassThresholds,
    DatasetError,
    FeatureWindow,
    consistency_filter,
    feature_frame,
    feature_windows,
    load_dataset,
    raw_labels,
    save_dataset,
    smote_nc,
    split_dataset,
)
from dspr.scene import RatingPanel

from conftest import frame, state


def panel_from_counts(counts_per_frame):
    """Build a panel whose per-frame rating counts match the given lists."""
    columns = []
    for counts in counts_per_frame:
        col = []
        for rating, n in zip(CLASS_LABELS, counts):
            col.extend([rating] * n)
        columns.append(col)
    return RatingPanel("s", np.array(columns).T)


def make_windows(n_clips=4, per_clip=30, t=10, seed=5):
    rng = np.random.default_rng(seed)
    windows = []
    for c in range(n_clips):
        rows = rng.normal(size=(per_clip + t - 1, FEATURE_WIDTH))
        rows[:, ROAD_COL] = rng.integers(1, 7, size=rows.shape[0])
        labels = [int(l) for l in rng.integers(1, 5, size=rows.shape[0])]
        windows.extend(feature_windows(rows, t, f"clip{c}",
                                       np.arange(rows.shape[0]) / 10.0,
                                       labels, labels))
    return windows


class TestFeatureFrame:
    def test_concatenation_order(self):
        f = frame(ego=state(vx=10.0), road=1)
        row = feature_frame(f, np.zeros(40))
        assert row.shape == (46,)
        assert list(row[:6]) == [10.0, 0.0, 0.0, 0.0, 0.0, 1.0]
        assert (row[6:] == 0).all()

    def test_width_is_46_for_any_input(self, rng):
        from conftest import random_frame
        for _ in range(10):
            f = random_frame(rng)
            row = feature_frame(f, rng.uniform(0, 5, size=40))
            assert row.shape == (46,)

    def test_road_class_preserved(self):
        row = feature_frame(frame(road=6), np.zeros(40))
        assert row[ROAD_COL] == 6.0

    def test_bad_risk_length(self):
        with pytest.raises(DatasetError):
            feature_frame(frame(), np.zeros(39))


class TestFeatureWindows:
    def test_window_counts(self):
        rows = np.zeros((100, FEATURE_WIDTH))
        rows[:, ROAD_COL] = 1
        times = np.arange(100) / 10.0
        assert len(feature_windows(rows, 10, "s", times)) == 91
        assert len(feature_windows(rows[:10], 10, "s", times[:10])) == 1
        assert len(feature_windows(rows[:9], 10, "s", times[:9])) == 0

    def test_rows_match_source_checksum(self, rng):
        rows = rng.normal(size=(40, FEATURE_WIDTH))
        rows[:, ROAD_COL] = 3
        times = np.arange(40) / 10.0
        windows = feature_windows(rows, 10, "s", times)
        for k, w in enumerate(windows):
            expected = rows[k:k + 10]
            assert hashlib.sha256(w.data.tobytes()).hexdigest() \
                == hashlib.sha256(np.ascontiguousarray(expected).tobytes()).hexdigest()
            assert w.end_time == pytest.approx(times[k + 9])

    def test_label_attaches_at_end_frame(self):
        rows = np.zeros((12, FEATURE_WIDTH))
        rows[:, ROAD_COL] = 1
        labels = [None] * 12
        labels[9], labels[11] = 2, 4
        windows = feature_windows(rows, 10, "s", np.arange(12) / 10.0, labels)
        assert windows[0].label == 2 and windows[0].provenance == "true"
        assert windows[1].label is None and windows[1].provenance == ""
        assert windows[2].label == 4


class TestConsistencyFilter:
    def test_table_thresholds(self):
        panel = panel_from_counts([[18, 2, 0, 0],    # p=0.9  >= 0.9 -> 1
                                   [10, 10, 0, 0],   # tie -> unlabeled
                                   [0, 0, 5, 15],    # p=0.75 >= 0.6 -> 4
                                   [5, 15, 0, 0],    # p=0.75 >= 0.75 -> 2
                                   [17, 3, 0, 0]])   # p=0.85 < 0.9 -> unlabeled
        decisions = consistency_filter(panel)
        assert decisions == [1, None, 4, 2, None]

    def test_default_thresholds(self):
        t = ClassThresholds()
        assert t.p_true == {1: 0.9, 2: 0.75, 3: 0.65, 4: 0.6}

    def test_row_permutation_invariance(self, rng):
        ratings = rng.integers(1, 5, size=(15, 30))
        panel = RatingPanel("s", ratings)
        base = consistency_filter(panel)
        for _ in range(5):
            perm = rng.permutation(15)
            assert consistency_filter(RatingPanel("s", ratings[perm])) == base

    def test_raising_threshold_monotone(self, rng):
        ratings = rng.integers(1, 5, size=(12, 200))
        panel = RatingPanel("s", ratings)
        base = ClassThresholds()
        n_true = sum(d is not None for d in consistency_filter(panel, base))
        for cls in CLASS_LABELS:
            raised = {**base.p_true, cls: min(1.0, base.p_true[cls] + 0.1)}
            n_raised = sum(d is not None for d in
                           consistency_filter(panel, ClassThresholds(raised)))
            assert n_raised <= n_true

    def test_unvalidated_panel_rejected(self):
        panel = RatingPanel("s", np.full((5, 3), 5))
        with pytest.raises(DatasetError):
            consistency_filter(panel)

    def test_empty_panel_rejected(self):
        panel = RatingPanel("s", np.empty((0, 4), dtype=int))
        with pytest.raises(DatasetError):
            consistency_filter(panel)

    def test_raw_majority_and_ties(self):
        panel = panel_from_counts([[3, 9, 0, 0], [6, 6, 0, 0], [0, 0, 2, 10]])
        assert raw_labels(panel) == [2, 1, 4]


class TestSplit:
    def test_ten_equal_clips(self):
        windows = make_windows(n_clips=10, per_clip=20)
        ds = split_dataset(windows, 0.7, seed=3)
        train_clips = {windows[i].source_id
                       for i in np.concatenate([ds.train_true, ds.train_unlabeled])}
        assert len(train_clips) == 7

    def test_deterministic(self):
        windows = make_windows()
        a = split_dataset(windows, 0.7, seed=9)
        b = split_dataset(windows, 0.7, seed=9)
        assert (a.train_true == b.train_true).all()
        assert (a.test_unlabeled == b.test_unlabeled).all()

    def test_partitions_disjoint_and_cover(self):
        windows = make_windows()
        ds = split_dataset(windows, 0.7, seed=1)
        allidx = np.concatenate(list(ds.partitions().values()))
        assert sorted(allidx.tolist()) == list(range(len(windows)))

    def test_needs_two_clips(self):
        windows = make_windows(n_clips=1)
        with pytest.raises(DatasetError):
            split_dataset(windows, 0.7, seed=0)

    def test_test_side_never_empty(self):
        windows = make_windows(n_clips=2, per_clip=5)
        ds = split_dataset(windows, 0.99, seed=0)
        assert np.concatenate([ds.test_true, ds.test_unlabeled]).size > 0

    def test_ratio_out_of_range(self):
        with pytest.raises(DatasetError):
            split_dataset(make_windows(), 1.0, seed=0)


def labeled_windows(counts: dict[int, int], t=4, seed=0):
    rng = np.random.default_rng(seed)
    windows = []
    for label, n in counts.items():
        for _ in range(n):
            data = rng.normal(loc=label, size=(t, FEATURE_WIDTH))
            data[:, ROAD_COL] = rng.integers(1, 4)
            windows.append(FeatureWindow(data=data, source_id=f"c{label}",
                                         end_time=0.0, label=label,
                                         raw_label=label, provenance="true"))
    return windows


class TestSmoteNc:
    def test_balances_to_majority(self):
        windows = labeled_windows({1: 477, 2: 35, 3: 36, 4: 9})
        out = smote_nc(windows, k=5, seed=1)
        hist = {c: sum(1 for w in out if w.label == c) for c in CLASS_LABELS}
        assert hist == {1: 477, 2: 477, 3: 477, 4: 477}

    def test_noop_when_balanced(self):
        windows = labeled_windows({1: 5, 2: 5, 3: 5, 4: 5})
        assert smote_nc(windows, seed=0) == windows

    def test_two_samples_interpolate_on_segment(self):
        windows = labeled_windows({1: 5, 2: 2})
        out = smote_nc(windows, k=1, seed=2)
        synthetic = [w for w in out if w.label == 2][2:]
        pair = [w for w in windows if w.label == 2]
        a, b = [w.data[:, CONTINUOUS_COLS] for w in pair]
        codes = [w.data[:, ROAD_COL] for w in pair]
        for w in synthetic:
            s = w.data[:, CONTINUOUS_COLS]
            denom = b - a
            lam = (s - a)[np.abs(denom) > 1e-12] / denom[np.abs(denom) > 1e-12]
            assert lam.std() < 1e-9
            assert -1e-9 <= lam.mean() <= 1 + 1e-9
            # with a single neighbour, the categorical is the neighbour's
            assert any((w.data[:, ROAD_COL] == c).all() for c in codes)

    def test_synthetic_categoricals_exist_in_class(self):
        windows = labeled_windows({1: 30, 2: 7}, seed=4)
        out = smote_nc(windows, k=5, seed=5)
        real_codes = {tuple(), }
        real_values = set()
        for w in windows:
            if w.label == 2:
                real_values.update(w.data[:, ROAD_COL].astype(int).tolist())
        for w in out[len(windows):]:
            assert w.label == 2
            assert set(w.data[:, ROAD_COL].astype(int).tolist()) <= real_values
            assert w.raw_label is None

    def test_single_sample_class_duplicates_with_jitter(self):
        windows = labeled_windows({1: 4, 3: 1})
        out = smote_nc(windows, k=5, seed=6)
        clones = [w for w in out if w.label == 3]
        assert len(clones) == 4
        base = clones[0]
        for w in clones[1:]:
            assert np.abs(w.data[:, CONTINUOUS_COLS]
                          - base.data[:, CONTINUOUS_COLS]).max() < 1e-4
            assert (w.data[:, ROAD_COL] == base.data[:, ROAD_COL]).all()

    def test_deterministic(self):
        windows = labeled_windows({1: 20, 2: 6})
        a = smote_nc(windows, seed=7)
        b = smote_nc(windows, seed=7)
        assert all((x.data == y.data).all() for x, y in zip(a, b))

    def test_empty_rejected(self):
        with pytest.raises(DatasetError):
            smote_nc([], seed=0)

    def test_unlabeled_rejected(self):
        w = labeled_windows({1: 2})[0]
        w.label = None
        with pytest.raises(DatasetError):
            smote_nc([w, w], seed=0)


class TestDatasetStorage:
    def test_roundtrip(self, tmp_path):
        windows = make_windows(n_clips=3, per_clip=10)
        for w in windows[::3]:
            w.label = None
            w.provenance = ""
        ds = split_dataset(windows, 0.6, seed=2)
        save_dataset(tmp_path / "ds", ds)
        loaded = load_dataset(tmp_path / "ds")
        assert len(loaded.windows) == len(ds.windows)
        for name, idx in ds.partitions().items():
            assert (getattr(loaded, name) == idx).all()
        for a, b in zip(ds.windows, loaded.windows):
            assert np.allclose(b.data, a.data, atol=1e-6)   # float32 storage
            assert b.label == a.label
            assert b.source_id == a.source_id
            assert b.end_time == pytest.approx(a.end_time)
            assert b.raw_label == a.raw_label

    def test_header_layout(self, tmp_path):
        windows = make_windows(n_clips=2, per_clip=4)
        ds = split_dataset(windows, 0.5, seed=0)
        save_dataset(tmp_path / "ds", ds)
        raw = (tmp_path / "ds" / "windows.bin").read_bytes()
        count, t, width = np.frombuffer(raw[:12], dtype="<u4")
        assert (count, t, width) == (len(windows), 10, 46)
        payload = np.frombuffer(raw[12:], dtype="<f4")
        assert payload.size == count * t * width
