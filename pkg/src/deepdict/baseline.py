"""Greedy layer-wise dictionary stack with a sparse final layer.

Each layer factorizes the previous layer's codes under the identity
activation. Inner layers alternate a closed-form dictionary solve with
dense least-squares coding; the final layer replaces the coding step with
L1-penalized soft-thresholding. Layers are trained greedily in order and
never revisited.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import (
    DEFAULT_RIDGE,
    IstaConfig,
    RidgePolicy,
    initial_dictionary,
    ista_sparse_code,
    ridge_code,
    solve_least_squares_dictionary,
    sparse_objective,
)

__all__ = [
    "TrainConfig",
    "DdlModel",
    "train_dense_layer",
    "train_sparse_layer",
    "train_ddl",
    "product_dictionary",
    "code_test_ddl",
]


@dataclass(frozen=True)
class TrainConfig:
    """Settings for the dense-then-sparse dictionary stack.

    ``depth`` must equal ``len(layer_sizes)``. ``l1_weight`` applies only to
    the final layer. ``init="qr"`` starts the first layer from an
    orthonormal basis of the training data (requires the first layer to be
    no wider than the input dimension) and deeper layers from seeded random
    atoms; ``init="random"`` uses random atoms everywhere.
    """

    depth: int = 3
    layer_sizes: tuple[int, ...] = (400, 200, 100)
    l1_weight: float = 0.1
    iters_per_layer: int = 20
    seed: int = 0
    init: str = "qr"
    ista: IstaConfig = field(default_factory=IstaConfig)
    ridge: RidgePolicy = DEFAULT_RIDGE

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if len(self.layer_sizes) != self.depth:
            raise ValueError("layer_sizes length must equal depth")
        if any(k < 1 for k in self.layer_sizes):
            raise ValueError("layer sizes must be >= 1")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be >= 0")
        if self.iters_per_layer < 1:
            raise ValueError("iters_per_layer must be >= 1")
        if self.init not in ("qr", "random"):
            raise ValueError(f"unknown init mode: {self.init!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class DdlModel:
    """Trained stack: per-layer dictionaries plus the final training codes."""

    dictionaries: list[np.ndarray]
    train_repr: np.ndarray
    config: TrainConfig
    traces: list[np.ndarray]
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        sizes = self.config.layer_sizes
        if len(self.dictionaries) != len(sizes):
            raise ValueError("one dictionary per layer is required")
        for layer, (d, k) in enumerate(zip(self.dictionaries, sizes), start=1):
            if d.shape[1] != k:
                raise ValueError(f"layer {layer} dictionary has {d.shape[1]} atoms, expected {k}")
            if layer > 1 and d.shape[0] != sizes[layer - 2]:
                raise ValueError(f"layer {layer} dictionary rows do not chain")
        if self.train_repr.shape[0] != sizes[-1]:
            raise ValueError("train_repr row count must equal the final layer size")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return self.config.layer_sizes

    @property
    def l1_weight(self) -> float:
        return self.config.l1_weight


def train_dense_layer(
    inputs: np.ndarray,
    init_dict: np.ndarray,
    n_iters: int,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One dense layer: alternate exact dictionary and code updates.

    Codes start as the least-squares codes against ``init_dict``; each
    iteration refreshes the dictionary and then the codes, both in closed
    form, so the recorded reconstruction-error trace is non-increasing.
    Returns (dictionary, codes, trace).
    """
    if init_dict.shape[0] != inputs.shape[0]:
        raise ValueError("init_dict rows must match the input dimension")
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    codes = ridge_code(init_dict, inputs, policy)
    dictionary = init_dict
    trace = np.empty(n_iters)
    for it in range(n_iters):
        dictionary = solve_least_squares_dictionary(inputs, codes, policy)
        codes = ridge_code(dictionary, inputs, policy)
        resid = inputs - dictionary @ codes
        trace[it] = float(np.sum(resid * resid))
    return dictionary, codes, trace


def train_sparse_layer(
    inputs: np.ndarray,
    init_dict: np.ndarray,
    n_iters: int,
    l1_weight: float,
    ista_cfg: IstaConfig = IstaConfig(),
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Final layer: closed-form dictionary solve alternated with sparse coding.

    The coding step is warm-started from the current codes, so the recorded
    penalized-objective trace is non-increasing. Returns
    (dictionary, codes, trace).
    """
    if init_dict.shape[0] != inputs.shape[0]:
        raise ValueError("init_dict rows must match the input dimension")
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    codes = ridge_code(init_dict, inputs, policy)
    dictionary = init_dict
    trace = np.empty(n_iters)
    for it in range(n_iters):
        dictionary = solve_least_squares_dictionary(inputs, codes, policy)
        codes = ista_sparse_code(dictionary, inputs, l1_weight, ista_cfg, warm_start=codes)
        trace[it] = sparse_objective(dictionary, inputs, codes, l1_weight)
    return dictionary, codes, trace


def train_ddl(features: np.ndarray, cfg: TrainConfig = TrainConfig()) -> DdlModel:
    """Train the full stack greedily on a feature matrix (samples as columns)."""
    if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
        raise ValueError("features must be a non-empty 2-D matrix")
    current = features
    dictionaries: list[np.ndarray] = []
    traces: list[np.ndarray] = []
    codes = current
    for layer, n_atoms in enumerate(cfg.layer_sizes, start=1):
        init = initial_dictionary(current, n_atoms, layer, cfg.init, cfg.seed)
        if layer < cfg.depth:
            dictionary, codes, trace = train_dense_layer(
                current, init, cfg.iters_per_layer, cfg.ridge
            )
        else:
            dictionary, codes, trace = train_sparse_layer(
                current, init, cfg.iters_per_layer, cfg.l1_weight, cfg.ista, cfg.ridge
            )
        dictionaries.append(dictionary)
        traces.append(trace)
        current = codes
    return DdlModel(dictionaries, codes, cfg, traces)


def product_dictionary(dictionaries: list[np.ndarray]) -> np.ndarray:
    """Product of the per-layer dictionaries, mapping final codes to inputs."""
    if not dictionaries:
        raise ValueError("at least one dictionary is required")
    product = dictionaries[0]
    for d in dictionaries[1:]:
        product = product @ d
    return product


def code_test_ddl(
    model: DdlModel,
    test_features: np.ndarray,
    ista_cfg: IstaConfig | None = None,
) -> np.ndarray:
    """Sparse codes of test samples against the stack's product dictionary.

    Solves one penalized least-squares problem per test column using the
    model's training L1 weight. An empty test matrix yields an empty code
    matrix.
    """
    product = product_dictionary(model.dictionaries)
    if test_features.shape[0] != product.shape[0]:
        raise ValueError(
            f"test features have {test_features.shape[0]} rows, expected {product.shape[0]}"
        )
    cfg = ista_cfg if ista_cfg is not None else model.config.ista
    return ista_sparse_code(product, test_features, model.l1_weight, cfg)
