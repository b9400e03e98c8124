"""Reference classifier, metrics, self-training loop, and the file contract."""

import json
import sys

import numpy as np
import pytest

from dspr.dataset import FEATURE_WIDTH, ROAD_COL, FeatureWindow, LabeledDataset
from dspr.learning import (
    ExternalClassifier,
    LearningError,
    ReferenceClassifier,
    SelfTrainConfig,
    TrainConfig,
    auc_ovr,
    check_simplex,
    evaluate,
    expand_windows,
    load_model,
    metrics_from_predictions,
    predict_proba,
    save_model,
    self_train,
    softmax_loss_grad,
    train_reference,
    write_probability_file,
)


def toy_windows(n, t=2, seed=0, separation=4.0, classes=(1, 2, 3, 4)):
    """Linearly separable 4-class windows: class-dependent shift on a band
    of risk-slot columns (several informative columns, like real windows)."""
    rng = np.random.default_rng(seed)
    tensors, labels = [], []
    for i in range(n):
        cls = classes[i % len(classes)]
        data = rng.normal(size=(t, FEATURE_WIDTH))
        data[:, 6:36] += separation * cls
        data[:, ROAD_COL] = rng.integers(1, 7)
        tensors.append(data)
        labels.append(cls)
    return np.stack(tensors), np.array(labels)


def dataset_from(tensors, labels, unlabeled_mask=None, test_mask=None):
    """Wrap raw windows into a LabeledDataset with chosen partitions."""
    n = len(labels)
    unlabeled_mask = np.zeros(n, bool) if unlabeled_mask is None else unlabeled_mask
    test_mask = np.zeros(n, bool) if test_mask is None else test_mask
    windows = []
    for i in range(n):
        hidden = bool(unlabeled_mask[i])
        windows.append(FeatureWindow(
            data=tensors[i], source_id="test" if test_mask[i] else "train",
            end_time=float(i),
            label=None if hidden else int(labels[i]),
            raw_label=int(labels[i]),
            provenance="" if hidden else "true"))
    idx = np.arange(n)
    return LabeledDataset(
        windows=windows,
        train_true=idx[~test_mask & ~unlabeled_mask],
        train_unlabeled=idx[~test_mask & unlabeled_mask],
        test_true=idx[test_mask & ~unlabeled_mask],
        test_unlabeled=idx[test_mask & unlabeled_mask],
        split_ratio=0.7, seed=0)


class TestExpansion:
    def test_shape_and_onehot(self):
        tensors, _ = toy_windows(4, t=5, seed=1)
        x = expand_windows(tensors)
        assert x.shape == (4, 5 * 51)
        row = tensors[0]
        code = int(row[0, ROAD_COL])
        onehot = x[0, 45:51]
        assert onehot.sum() == 1.0 and onehot[code - 1] == 1.0


class TestGradient:
    def test_matches_central_differences(self):
        # 10-sample batch, double precision, step 1e-5, 1e-6 relative.
        tensors, labels = toy_windows(10, seed=3)
        x = expand_windows(tensors)
        x1 = np.hstack([x, np.ones((10, 1))])
        y = np.zeros((10, 4))
        y[np.arange(10), labels - 1] = 1.0
        rng = np.random.default_rng(0)
        weights = rng.normal(scale=0.05, size=(4, x1.shape[1]))
        _, grad = softmax_loss_grad(weights, x1, y, l2=1e-3)
        step = 1e-5
        idx = [(i, j) for i in range(4)
               for j in rng.integers(0, x1.shape[1], size=30)]
        for i, j in idx:
            wp, wm = weights.copy(), weights.copy()
            wp[i, j] += step
            wm[i, j] -= step
            lp, _ = softmax_loss_grad(wp, x1, y, l2=1e-3)
            lm, _ = softmax_loss_grad(wm, x1, y, l2=1e-3)
            fd = (lp - lm) / (2 * step)
            denom = max(abs(fd), abs(grad[i, j]), 1e-8)
            assert abs(fd - grad[i, j]) / denom < 1e-6


class TestReferenceClassifier:
    def test_separable_reaches_perfect_training_accuracy(self):
        tensors, labels = toy_windows(80, seed=2)
        model = train_reference(tensors, labels)
        probs = predict_proba(model, tensors)
        pred = np.array([1, 2, 3, 4])[probs.argmax(axis=1)]
        assert (pred == labels).all()

    def test_deterministic(self):
        tensors, labels = toy_windows(40, seed=4)
        m1 = train_reference(tensors, labels)
        m2 = train_reference(tensors, labels)
        assert (m1.weights == m2.weights).all()
        assert (m1.mean == m2.mean).all()

    def test_simplex_output(self):
        tensors, labels = toy_windows(30, seed=5)
        model = train_reference(tensors, labels)
        probs = predict_proba(model, tensors)
        assert np.abs(probs.sum(axis=1) - 1).max() < 1e-9
        assert (probs >= 0).all()

    def test_empty_rejected(self):
        with pytest.raises(LearningError):
            train_reference(np.zeros((0, 3, FEATURE_WIDTH)), np.array([]))

    def test_bad_labels_rejected(self):
        tensors, labels = toy_windows(8, seed=6)
        labels[0] = 7
        with pytest.raises(LearningError):
            train_reference(tensors, labels)

    def test_model_roundtrip(self, tmp_path):
        tensors, labels = toy_windows(24, seed=7)
        model = train_reference(tensors, labels)
        save_model(tmp_path / "m.bin", model)
        loaded = load_model(tmp_path / "m.bin")
        assert loaded.window == model.window
        assert (loaded.weights == model.weights).all()
        assert np.allclose(predict_proba(loaded, tensors),
                           predict_proba(model, tensors))

    def test_model_magic_checked(self, tmp_path):
        (tmp_path / "junk.bin").write_bytes(b"not a model")
        with pytest.raises(LearningError):
            load_model(tmp_path / "junk.bin")


class TestMetrics:
    def test_two_class_hand_computation(self):
        # Confusion [[2,1],[0,3]] over classes {1,2}: precision_1 = 1,
        # recall_1 = 2/3.
        y = np.array([1, 1, 1, 2, 2, 2])
        probs = np.zeros((6, 4))
        hits = [1, 1, 2, 2, 2, 2]
        for i, cls in enumerate(hits):
            probs[i, cls - 1] = 1.0
        m = metrics_from_predictions(y, probs)
        assert m.confusion[0, 0] == 2 and m.confusion[0, 1] == 1
        assert m.confusion[1, 1] == 3 and m.confusion[1, 0] == 0
        assert m.per_class[1]["precision"] == pytest.approx(1.0)
        assert m.per_class[1]["recall"] == pytest.approx(2 / 3)
        assert m.accuracy == pytest.approx(5 / 6)

    def test_perfect_predictions(self):
        y = np.array([1, 2, 3, 4] * 10)
        probs = np.zeros((40, 4))
        probs[np.arange(40), y - 1] = 1.0
        m = metrics_from_predictions(y, probs)
        assert m.accuracy == 1.0
        assert m.macro_f1 == 1.0
        assert m.macro_auc == 1.0

    def test_random_predictions_near_quarter(self):
        rng = np.random.default_rng(1234)
        y = np.array([1, 2, 3, 4] * 250)
        probs = rng.dirichlet(np.ones(4), size=1000)
        m = metrics_from_predictions(y, probs)
        assert abs(m.accuracy - 0.25) <= 0.05

    def test_confusion_rows_are_true_counts(self):
        y = np.array([1, 1, 2, 3, 3, 3])
        probs = np.full((6, 4), 0.25)
        m = metrics_from_predictions(y, probs)
        assert list(m.confusion.sum(axis=1)) == [2, 1, 3, 0]
        assert m.accuracy == pytest.approx(np.trace(m.confusion) / 6)

    def test_single_class_auc_omitted(self):
        y = np.ones(5, dtype=int)
        probs = np.full((5, 4), 0.25)
        m = metrics_from_predictions(y, probs)
        assert m.auc_per_class == {}
        assert m.macro_auc is None

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        y = rng.integers(1, 5, size=60)
        probs = rng.dirichlet(np.ones(4), size=60)
        m1 = metrics_from_predictions(y, probs)
        perm = rng.permutation(60)
        m2 = metrics_from_predictions(y[perm], probs[perm])
        assert m1.accuracy == m2.accuracy
        assert (m1.confusion == m2.confusion).all()
        assert m1.macro_auc == pytest.approx(m2.macro_auc)

    def test_auc_rank_formula(self):
        y = np.array([True, False, True, False])
        scores = np.array([0.9, 0.8, 0.7, 0.1])
        # pairs: (0.9>0.8), (0.9>0.1), (0.7<0.8), (0.7>0.1) -> 3/4
        assert auc_ovr(y, scores) == pytest.approx(0.75)
        assert auc_ovr(np.array([True, True]), np.array([0.5, 0.2])) is None

    def test_simplex_guard(self):
        with pytest.raises(LearningError):
            check_simplex(np.array([[0.5, 0.4, 0.2, 0.1]]))


class StubClassifier:
    """Deterministic fake: probabilities keyed on a feature hash."""

    def __init__(self, confident: float = 0.95):
        self.confident = confident
        self.trained_on = []

    def train(self, dataset, indices, labels, seed):
        self.trained_on.append((list(map(int, indices)), list(map(int, labels))))
        return {"n": len(indices)}

    def predict_proba(self, model, dataset, indices):
        probs = np.full((len(indices), 4), (1 - self.confident) / 3)
        for row, i in enumerate(indices):
            cls = int(dataset.windows[i].data[0, 6] % 4) + 1
            probs[row, cls - 1] = self.confident
        return probs


class TestSelfTrain:
    def make_dataset(self, n=40, n_unlabeled=16, n_test=10):
        tensors, labels = toy_windows(n, seed=8)
        unlabeled = np.zeros(n, bool)
        unlabeled[:n_unlabeled] = True
        test = np.zeros(n, bool)
        test[-n_test:] = False
        test[n_unlabeled:n_unlabeled + n_test] = True
        return dataset_from(tensors, labels, unlabeled, test)

    def test_unreachable_threshold_adopts_nothing(self):
        ds = self.make_dataset()
        clf = StubClassifier()
        result = self_train(ds, clf, SelfTrainConfig(epsilon=1.01, iterations=3))
        assert all(it["adopted"] == 0 for it in result.audit["iterations"])
        assert result.audit["final_train_size"] == ds.train_true.size
        # every training call saw exactly the true set
        for indices, _ in clf.trained_on:
            assert indices == list(map(int, ds.train_true))

    def test_zero_threshold_adopts_everything_first_iteration(self):
        ds = self.make_dataset()
        result = self_train(ds, StubClassifier(), SelfTrainConfig(epsilon=0.0, iterations=3))
        iters = result.audit["iterations"]
        assert iters[0]["adopted"] == ds.train_unlabeled.size
        assert iters[0]["remaining_unlabeled"] == 0
        assert all(it["adopted"] == 0 for it in iters[1:])

    def test_pseudo_set_monotone_and_disjoint(self):
        ds = self.make_dataset()
        result = self_train(ds, StubClassifier(confident=0.91),
                            SelfTrainConfig(epsilon=0.9, iterations=4))
        totals = [it["pseudo_total"] for it in result.audit["iterations"]]
        assert totals == sorted(totals)
        assert result.audit["pseudo_adopted"] <= ds.train_unlabeled.size

    def test_fixed_seed_bit_identical_audit(self):
        ds = self.make_dataset()
        r1 = self_train(ds, StubClassifier(), SelfTrainConfig(epsilon=0.5, iterations=3))
        r2 = self_train(ds, StubClassifier(), SelfTrainConfig(epsilon=0.5, iterations=3))
        assert json.dumps(r1.audit, sort_keys=True) == json.dumps(r2.audit, sort_keys=True)

    def test_empty_true_set_rejected(self):
        tensors, labels = toy_windows(10, seed=9)
        ds = dataset_from(tensors, labels, unlabeled_mask=np.ones(10, bool))
        with pytest.raises(LearningError):
            self_train(ds, StubClassifier())

    def test_loop_with_reference_classifier_learns(self):
        tensors, labels = toy_windows(400, seed=10)
        unlabeled = np.zeros(400, bool)
        unlabeled[:120] = True
        test = np.zeros(400, bool)
        test[280:] = True
        ds = dataset_from(tensors, labels, unlabeled, test)
        clf = ReferenceClassifier(TrainConfig(max_epochs=800))
        result = self_train(ds, clf, SelfTrainConfig(epsilon=0.8, iterations=2))
        assert result.metrics.accuracy >= 0.9
        assert result.audit["pseudo_adopted"] > 0


class TestEvaluate:
    def test_evaluate_on_partition(self):
        tensors, labels = toy_windows(300, seed=11)
        test = np.zeros(300, bool)
        test[200:] = True
        ds = dataset_from(tensors, labels, test_mask=test)
        clf = ReferenceClassifier(TrainConfig(max_epochs=800))
        model = clf.train(ds, ds.train_true, ds.labels_of(ds.train_true), 0)
        m = evaluate(clf, model, ds, ds.test_true)
        assert m.accuracy >= 0.9

    def test_empty_rejected(self):
        tensors, labels = toy_windows(10, seed=12)
        ds = dataset_from(tensors, labels)
        clf = ReferenceClassifier()
        model = clf.train(ds, ds.train_true, ds.labels_of(ds.train_true), 0)
        with pytest.raises(LearningError):
            evaluate(clf, model, ds, np.array([], dtype=int))


class TestFileContract:
    def test_probability_file_roundtrip(self, tmp_path):
        path = tmp_path / "probs_query.csv"
        probs = np.array([[0.7, 0.1, 0.1, 0.1], [0.25, 0.25, 0.25, 0.25]])
        write_probability_file(path, [3, 9], probs)
        from dspr.learning import read_probability_file
        out = read_probability_file(path, [3, 9])
        assert np.allclose(out, probs)
        with pytest.raises(LearningError):
            read_probability_file(path, [3, 4])

    def test_external_classifier_matches_in_process(self, tmp_path):
        # The stub subprocess runs the same reference classifier through the
        # dataset-directory contract; the loop must adopt identical windows.
        from dspr.dataset import save_dataset

        tensors, labels = toy_windows(200, seed=13)
        unlabeled = np.zeros(200, bool)
        unlabeled[::4] = True
        test = np.zeros(200, bool)
        test[150:] = True
        unlabeled[150:] = False
        ds = dataset_from(tensors, labels, unlabeled, test)
        ds_dir = tmp_path / "ds"
        save_dataset(ds_dir, ds)

        import pathlib
        stub = pathlib.Path(__file__).with_name("external_stub.py")
        external = ExternalClassifier([sys.executable, str(stub)], ds_dir,
                                      tmp_path / "work")
        cfg = SelfTrainConfig(epsilon=0.8, iterations=2)
        res_ext = self_train(ds, external, cfg)

        clf = ReferenceClassifier(TrainConfig())
        res_ref = self_train(ds, clf, cfg)
        ext_iters = [it["adopted"] for it in res_ext.audit["iterations"]]
        ref_iters = [it["adopted"] for it in res_ref.audit["iterations"]]
        assert ext_iters == ref_iters
        assert res_ext.metrics.accuracy == pytest.approx(res_ref.metrics.accuracy)
