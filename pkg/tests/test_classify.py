"""Nearest-neighbor prediction, tie rules, accuracy sweeps, test-side coding."""

import numpy as np
import pytest

from deepdict.classify import (
    KnnConfig,
    code_layers,
    code_test_ddlic,
    evaluate_accuracy,
    knn_predict,
)
from deepdict.data import make_synthetic_clusters
from deepdict.intraclass import DdlicConfig, train_ddlic
from deepdict.kernels import ridge_code

RNG = np.random.default_rng


def oracle_predict(train_codes, train_labels, test_codes, k):
    """Slow reference: explicit sort, majority vote, documented tie rules."""
    out = np.empty(test_codes.shape[1], dtype=np.int64)
    for j in range(test_codes.shape[1]):
        dist = np.linalg.norm(train_codes - test_codes[:, j : j + 1], axis=0)
        order = np.argsort(dist, kind="stable")[:k]
        candidates = {}
        for i in order:
            lab = int(train_labels[i])
            cnt, tot = candidates.get(lab, (0, 0.0))
            candidates[lab] = (cnt + 1, tot + float(dist[i]))
        # most votes; then the smaller summed distance; then the smaller label
        best = min(candidates.items(), key=lambda kv: (-kv[1][0], kv[1][1], kv[0]))
        out[j] = best[0]
    return out


class TestKnnPredict:
    def test_matches_oracle_on_random_sets(self):
        rng = RNG(0)
        for trial in range(6):
            n_train, n_test, dim = 40 + 10 * trial, 25, 4
            train = rng.normal(size=(dim, n_train))
            labels = rng.integers(0, 4, size=n_train)
            test = rng.normal(size=(dim, n_test))
            for k in (1, 3, 7):
                got = knn_predict(train, labels, test, k)
                want = oracle_predict(train, labels, test, k)
                assert np.array_equal(got, want), f"trial {trial}, k={k}"

    def test_matches_oracle_with_duplicate_points(self):
        rng = RNG(1)
        base = rng.normal(size=(3, 20))
        train = np.concatenate([base, base], axis=1)  # exact distance ties
        labels = np.concatenate([np.zeros(20, np.int64), np.ones(20, np.int64)])
        test = base + 1e-12
        for k in (2, 4, 6):
            got = knn_predict(train, labels, test, k)
            want = oracle_predict(train, labels, test, k)
            assert np.array_equal(got, want)

    def test_vote_count_beats_distance(self):
        # two votes for 1 at moderate distance beat one very close vote for 0
        train = np.array([[0.0, 2.0, 2.1]])
        labels = np.array([0, 1, 1])
        test = np.array([[0.1]])
        assert knn_predict(train, labels, test, 3)[0] == 1

    def test_distance_breaks_count_ties(self):
        train = np.array([[0.0, 1.0, 10.0, 2.0]])
        labels = np.array([0, 0, 1, 1])
        test = np.array([[0.5]])
        # counts 2-2; class 0 sum 1.0, class 1 sum 11.0
        assert knn_predict(train, labels, test, 4)[0] == 0

    def test_smaller_label_breaks_full_ties(self):
        train = np.array([[-1.0, 1.0]])
        labels = np.array([7, 3])
        test = np.array([[0.0]])
        assert knn_predict(train, labels, test, 2)[0] == 3

    def test_k_larger_than_training_set_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            knn_predict(np.zeros((2, 3)), np.zeros(3, np.int64), np.zeros((2, 1)), 4)

    def test_original_label_values_preserved(self):
        train = np.array([[0.0, 5.0]])
        labels = np.array([42, -7])
        test = np.array([[0.2, 4.9]])
        assert knn_predict(train, labels, test, 1).tolist() == [42, -7]


class TestEvaluateAccuracy:
    def test_curve_matches_manual_loop(self):
        rng = RNG(2)
        train = rng.normal(size=(3, 30))
        labels = rng.integers(0, 3, size=30)
        test = rng.normal(size=(3, 15))
        targets = rng.integers(0, 3, size=15)
        rep = evaluate_accuracy(train, labels, test, targets, KnnConfig(1, 8))
        assert rep.ks == tuple(range(1, 9))
        for k, acc in zip(rep.ks, rep.accuracies):
            want = float(np.mean(knn_predict(train, labels, test, k) == targets))
            assert acc == pytest.approx(want)
        assert rep.best_accuracy == max(rep.accuracies)
        first_best = rep.ks[int(np.argmax(rep.accuracies))]
        assert rep.best_k == first_best

    def test_neighbor_range_clipped_to_training_size(self):
        rng = RNG(3)
        train = rng.normal(size=(2, 5))
        labels = np.array([0, 0, 1, 1, 1])
        test = rng.normal(size=(2, 4))
        rep = evaluate_accuracy(train, labels, test, np.zeros(4, np.int64), KnnConfig(1, 30))
        assert rep.ks == (1, 2, 3, 4, 5)

    def test_empty_test_set_rejected(self):
        with pytest.raises(ValueError, match="empty test"):
            evaluate_accuracy(
                np.zeros((2, 4)), np.zeros(4, np.int64), np.zeros((2, 0)), np.zeros(0, np.int64)
            )

    def test_tiny_training_set_rejected(self):
        with pytest.raises(ValueError, match="too small"):
            evaluate_accuracy(
                np.zeros((2, 3)),
                np.zeros(3, np.int64),
                np.ones((2, 2)),
                np.zeros(2, np.int64),
                KnnConfig(k_min=5, k_max=9),
            )

    def test_cross_validated_selection_matches_manual_loocv(self):
        rng = RNG(4)
        data = make_synthetic_clusters(3, 12, 4, 3.0, seed=5)
        train = data.features + rng.normal(scale=0.8, size=data.features.shape)
        labels = data.original_labels
        test = rng.normal(size=(4, 10))
        targets = rng.integers(0, 3, size=10)
        cfg = KnnConfig(1, 8, selection="cv")
        rep = evaluate_accuracy(train, labels, test, targets, cfg)

        # manual leave-one-out over the training set
        n = train.shape[1]
        scores = []
        for k in range(1, 9):
            hits = 0
            for i in range(n):
                keep = np.arange(n) != i
                pred = knn_predict(train[:, keep], labels[keep], train[:, i : i + 1], k)
                hits += int(pred[0] == labels[i])
            scores.append(hits / n)
        want_k = 1 + int(np.argmax(scores))
        assert rep.selected_k == want_k
        want_acc = float(
            np.mean(knn_predict(train, labels, test, want_k) == targets)
        )
        assert rep.selected_accuracy == pytest.approx(want_acc)
        # the stored curve still reports the plain sweep maximum
        assert rep.best_accuracy == max(rep.accuracies)

    def test_default_selection_reports_curve_best(self):
        rng = RNG(6)
        train = rng.normal(size=(2, 20))
        labels = rng.integers(0, 2, size=20)
        test = rng.normal(size=(2, 9))
        targets = rng.integers(0, 2, size=9)
        rep = evaluate_accuracy(train, labels, test, targets, KnnConfig(1, 6))
        assert rep.selected_k == rep.best_k
        assert rep.selected_accuracy == rep.best_accuracy


class TestTestSideCoding:
    def test_layerwise_codes_solve_each_layer(self):
        data = make_synthetic_clusters(2, 8, 10, 4.0, seed=7)
        cfg = DdlicConfig(depth=2, layer_sizes=(6, 4), alphas=(0.05, 0.05),
                          iters_per_layer=5)
        model = train_ddlic(data, cfg)
        rng = RNG(8)
        test = rng.normal(size=(10, 6))
        per_layer = code_layers(model.dictionaries, test)
        want = ridge_code(model.dictionaries[0], test)
        assert np.allclose(per_layer[0], want)
        want2 = ridge_code(model.dictionaries[1], per_layer[0])
        assert np.allclose(per_layer[1], want2)
        last = code_test_ddlic(model, test)
        assert np.allclose(last, per_layer[-1])

    def test_row_mismatch_rejected(self):
        data = make_synthetic_clusters(2, 6, 8, 4.0, seed=9)
        cfg = DdlicConfig(depth=1, layer_sizes=(4,), alphas=(0.05,), iters_per_layer=3)
        model = train_ddlic(data, cfg)
        with pytest.raises(ValueError):
            code_test_ddlic(model, np.zeros((5, 3)))
