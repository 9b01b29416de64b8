"""Test-time coding through a trained stack and nearest-neighbor evaluation.

Code matrices follow the column-major sample convention. Distances are
Euclidean; all tie-breaking is deterministic (smaller summed neighbor
distance first, then smaller label), so repeated evaluations of the same
inputs are identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .kernels import DEFAULT_RIDGE, RidgePolicy, ridge_code

if TYPE_CHECKING:
    from .intraclass import DdlicModel

__all__ = [
    "KnnConfig",
    "KnnReport",
    "code_layers",
    "code_test_ddlic",
    "knn_predict",
    "evaluate_accuracy",
]


@dataclass(frozen=True)
class KnnConfig:
    """Neighbor-size sweep settings.

    ``selection="best"`` reports the sweep's best accuracy and its neighbor
    size; ``selection="cv"`` instead picks the neighbor size by leave-one-out
    validation on the training codes and reports the test accuracy at that
    size (the full curve is returned either way).
    """

    k_min: int = 1
    k_max: int = 30
    selection: str = "best"

    def __post_init__(self) -> None:
        if self.k_min < 1:
            raise ValueError("k_min must be >= 1")
        if self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")
        if self.selection not in ("best", "cv"):
            raise ValueError(f"unknown selection mode: {self.selection!r}")


@dataclass
class KnnReport:
    """Accuracy-vs-neighbor-size curve plus the reported operating point.

    ``best_k``/``best_accuracy`` always describe the maximum of the stored
    curve; ``selected_k``/``selected_accuracy`` are what the experiment
    aggregates and may differ under cross-validated selection.
    """

    ks: tuple[int, ...]
    accuracies: np.ndarray
    best_k: int
    best_accuracy: float
    selected_k: int
    selected_accuracy: float


def code_layers(
    dictionaries: list[np.ndarray],
    test_features: np.ndarray,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> list[np.ndarray]:
    """Dense least-squares codes of the test samples after each layer."""
    if not dictionaries:
        raise ValueError("at least one dictionary is required")
    if test_features.shape[0] != dictionaries[0].shape[0]:
        raise ValueError(
            f"test features have {test_features.shape[0]} rows, "
            f"expected {dictionaries[0].shape[0]}"
        )
    out = []
    current = test_features
    for dictionary in dictionaries:
        current = ridge_code(dictionary, current, policy)
        out.append(current)
    return out


def code_test_ddlic(
    model: "DdlicModel",
    test_features: np.ndarray,
    policy: RidgePolicy | None = None,
) -> np.ndarray:
    """Final-layer codes of test samples, coded layer by layer.

    Test coding solves one dense least-squares problem per layer; the
    intra-class penalty applies only during training, never at test time.
    """
    if policy is None:
        policy = getattr(model.config, "ridge", DEFAULT_RIDGE)
    return code_layers(model.dictionaries, test_features, policy)[-1]


def _pairwise_euclidean(train_codes: np.ndarray, test_codes: np.ndarray) -> np.ndarray:
    """(n_train, n_test) Euclidean distances between columns."""
    train_sq = np.sum(train_codes * train_codes, axis=0)
    test_sq = np.sum(test_codes * test_codes, axis=0)
    d2 = train_sq[:, None] + test_sq[None, :] - 2.0 * (train_codes.T @ test_codes)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def _vote(train_labels: np.ndarray, dist_col: np.ndarray, neighbor_idx: np.ndarray) -> int:
    votes = train_labels[neighbor_idx]
    best_label = None
    best_count = -1
    best_sum = np.inf
    # candidate labels ascending, so equal (count, sum) keeps the smaller label
    for label in np.unique(votes):
        members = neighbor_idx[votes == label]
        count = members.size
        dist_sum = float(dist_col[members].sum())
        if count > best_count or (count == best_count and dist_sum < best_sum):
            best_label = label
            best_count = count
            best_sum = dist_sum
    return int(best_label)


def knn_predict(
    train_codes: np.ndarray,
    train_labels: np.ndarray,
    test_codes: np.ndarray,
    k: int,
) -> np.ndarray:
    """Majority vote over the k nearest training columns, per test column."""
    n_train = train_codes.shape[1]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n_train:
        raise ValueError(f"k={k} exceeds the {n_train} training samples")
    if train_codes.shape[0] != test_codes.shape[0]:
        raise ValueError("train and test codes must have the same dimension")
    if np.asarray(train_labels).shape != (n_train,):
        raise ValueError("train_labels must have one entry per training column")
    labels = np.asarray(train_labels)
    dist = _pairwise_euclidean(train_codes, test_codes)
    order = np.argsort(dist, axis=0, kind="stable")
    return np.array(
        [_vote(labels, dist[:, j], order[:k, j]) for j in range(test_codes.shape[1])],
        dtype=np.int64,
    )


def _loocv_neighbor_choice(
    train_codes: np.ndarray, train_labels: np.ndarray, ks: list[int]
) -> int:
    """Leave-one-out accuracy over the training codes; smallest best k wins."""
    n = train_codes.shape[1]
    dist = _pairwise_euclidean(train_codes, train_codes)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=0, kind="stable")
    valid = [k for k in ks if k <= n - 1]
    if not valid:
        return ks[0]
    best_k = valid[0]
    best_acc = -1.0
    for k in valid:
        preds = np.array(
            [_vote(train_labels, dist[:, j], order[:k, j]) for j in range(n)]
        )
        acc = float(np.mean(preds == train_labels))
        if acc > best_acc:
            best_acc = acc
            best_k = k
    return best_k


def evaluate_accuracy(
    train_codes: np.ndarray,
    train_labels: np.ndarray,
    test_codes: np.ndarray,
    test_labels: np.ndarray,
    cfg: KnnConfig = KnnConfig(),
) -> KnnReport:
    """Accuracy across the neighbor-size sweep plus the reported choice.

    Sweeps every k in the configured range that does not exceed the
    training-set size. Raises on an empty test set.
    """
    if test_codes.shape[1] == 0:
        raise ValueError("empty test set")
    n_train = train_codes.shape[1]
    labels = np.asarray(train_labels)
    targets = np.asarray(test_labels)
    if targets.shape != (test_codes.shape[1],):
        raise ValueError("test_labels must have one entry per test column")
    ks = [k for k in range(cfg.k_min, cfg.k_max + 1) if k <= n_train]
    if not ks:
        raise ValueError("no valid neighbor size: training set is too small")

    dist = _pairwise_euclidean(train_codes, test_codes)
    order = np.argsort(dist, axis=0, kind="stable")
    accuracies = np.empty(len(ks))
    for i, k in enumerate(ks):
        preds = np.array(
            [_vote(labels, dist[:, j], order[:k, j]) for j in range(test_codes.shape[1])]
        )
        accuracies[i] = float(np.mean(preds == targets))

    best_pos = int(np.argmax(accuracies))  # first max: smallest such k
    best_k = ks[best_pos]
    best_accuracy = float(accuracies[best_pos])
    if cfg.selection == "cv":
        selected_k = _loocv_neighbor_choice(train_codes, labels, ks)
        selected_accuracy = float(accuracies[ks.index(selected_k)])
    else:
        selected_k = best_k
        selected_accuracy = best_accuracy
    return KnnReport(
        ks=tuple(ks),
        accuracies=accuracies,
        best_k=best_k,
        best_accuracy=best_accuracy,
        selected_k=selected_k,
        selected_accuracy=selected_accuracy,
    )
