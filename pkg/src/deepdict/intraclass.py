"""Layer-wise dictionary learning with an intra-class compactness penalty.

Each layer minimizes the squared reconstruction error of its input plus a
pull-together penalty: ``alpha`` times the sum, over classes, of squared
distances between every ordered pair of same-class code columns. Both
update steps are exact minimizers (a closed-form dictionary solve, and
sequential per-column code solves), so the per-layer objective trace is
non-increasing. Layers are trained greedily and never revisited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledMatrix
from .kernels import (
    DEFAULT_RIDGE,
    RidgePolicy,
    gram_solver,
    initial_dictionary,
    ridge_code,
    solve_least_squares_dictionary,
)

__all__ = [
    "DdlicConfig",
    "DdlicModel",
    "compactness_penalty",
    "layer_objective",
    "column_gradient",
    "dictionary_gradient",
    "update_dictionary",
    "update_representations",
    "train_layer",
    "train_ddlic",
]


@dataclass(frozen=True)
class DdlicConfig:
    """Settings for the intra-class-constrained stack.

    ``alphas`` holds one non-negative compactness weight per layer and must
    have the same length as ``layer_sizes`` (= ``depth``). ``stop_rel_tol``
    optionally stops a layer early once the relative objective change falls
    below it; by default it is off, so every layer runs exactly
    ``iters_per_layer`` iterations.
    """

    depth: int = 3
    layer_sizes: tuple[int, ...] = (400, 200, 100)
    alphas: tuple[float, ...] = (1e-3, 1e-3, 1e-3)
    iters_per_layer: int = 20
    seed: int = 0
    init: str = "qr"
    ridge: RidgePolicy = DEFAULT_RIDGE
    stop_rel_tol: float | None = None

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if len(self.layer_sizes) != self.depth:
            raise ValueError("layer_sizes length must equal depth")
        if len(self.alphas) != self.depth:
            raise ValueError("alphas length must equal depth")
        if any(k < 1 for k in self.layer_sizes):
            raise ValueError("layer sizes must be >= 1")
        if any(a < 0 for a in self.alphas):
            raise ValueError("alphas must be >= 0")
        if self.iters_per_layer < 1:
            raise ValueError("iters_per_layer must be >= 1")
        if self.init not in ("qr", "random"):
            raise ValueError(f"unknown init mode: {self.init!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.stop_rel_tol is not None and self.stop_rel_tol <= 0:
            raise ValueError("stop_rel_tol must be > 0 when given")


@dataclass
class DdlicModel:
    """Trained stack: dictionaries, per-layer training codes, and traces."""

    dictionaries: list[np.ndarray]
    layer_reprs: list[np.ndarray]
    config: DdlicConfig
    traces: list[np.ndarray]
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        sizes = self.config.layer_sizes
        if not (len(self.dictionaries) == len(self.layer_reprs) == len(sizes)):
            raise ValueError("one dictionary, code matrix and trace per layer is required")
        for layer, (d, z, k) in enumerate(
            zip(self.dictionaries, self.layer_reprs, sizes), start=1
        ):
            if d.shape[1] != k or z.shape[0] != k:
                raise ValueError(f"layer {layer} shapes do not match its size {k}")
            if layer > 1 and d.shape[0] != sizes[layer - 2]:
                raise ValueError(f"layer {layer} dictionary rows do not chain")

    @property
    def train_repr(self) -> np.ndarray:
        """Final-layer training codes."""
        return self.layer_reprs[-1]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return self.config.layer_sizes

    @property
    def alphas(self) -> tuple[float, ...]:
        return self.config.alphas


def _check_class_index(class_index, n_columns: int) -> None:
    covered = np.concatenate([np.asarray(ix) for ix in class_index]) if class_index else np.empty(0, int)
    if covered.size != n_columns or not np.array_equal(np.sort(covered), np.arange(n_columns)):
        raise ValueError("class_index must partition the code columns")


def compactness_penalty(codes: np.ndarray, class_index) -> float:
    """Sum over classes of squared distances between all ordered same-class pairs.

    Every unordered pair is counted twice (once per order).
    """
    total = 0.0
    for idx in class_index:
        block = codes[:, idx]
        n_c = block.shape[1]
        sq = float(np.sum(block * block))
        s = block.sum(axis=1)
        total += 2.0 * (n_c * sq - float(s @ s))
    return total


def layer_objective(
    inputs: np.ndarray,
    dictionary: np.ndarray,
    codes: np.ndarray,
    alpha: float,
    class_index,
) -> float:
    """Reconstruction error plus ``alpha`` times the intra-class spread."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    resid = inputs - dictionary @ codes
    value = float(np.sum(resid * resid))
    if alpha > 0:
        value += alpha * compactness_penalty(codes, class_index)
    return value


def column_gradient(
    dictionary: np.ndarray,
    inputs: np.ndarray,
    codes: np.ndarray,
    alpha: float,
    class_cols: np.ndarray,
    col: int,
) -> np.ndarray:
    """Gradient of the layer objective with respect to one code column.

    ``class_cols`` lists the columns of the class containing ``col``.
    """
    class_cols = np.asarray(class_cols)
    if col not in class_cols:
        raise ValueError("col must belong to class_cols")
    z = codes[:, col]
    recon = 2.0 * (dictionary.T @ (dictionary @ z - inputs[:, col]))
    siblings_sum = codes[:, class_cols].sum(axis=1) - z
    n_c = class_cols.size
    pull = 4.0 * alpha * ((n_c - 1) * z - siblings_sum)
    return recon + pull


def dictionary_gradient(
    inputs: np.ndarray,
    dictionary: np.ndarray,
    codes: np.ndarray,
) -> np.ndarray:
    """Gradient of the reconstruction term with respect to the dictionary."""
    return 2.0 * (dictionary @ codes - inputs) @ codes.T


def update_dictionary(
    inputs: np.ndarray,
    codes: np.ndarray,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> np.ndarray:
    """Exact dictionary refresh; the compactness term does not involve it."""
    return solve_least_squares_dictionary(inputs, codes, policy)


def update_representations(
    dictionary: np.ndarray,
    inputs: np.ndarray,
    codes: np.ndarray,
    alpha: float,
    class_index,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> np.ndarray:
    """One sequential sweep of exact per-column code updates.

    Columns are visited class by class in index order, each update seeing
    the latest values of its class siblings, so the layer objective cannot
    increase across the sweep. The per-class system matrix depends only on
    the class size; it is factorized once per distinct size and shared.
    Returns a new code matrix; the input is not modified.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if dictionary.shape[0] != inputs.shape[0]:
        raise ValueError("dictionary rows must match the input dimension")
    if codes.shape != (dictionary.shape[1], inputs.shape[1]):
        raise ValueError("codes shape must be (n_atoms, n_samples)")
    _check_class_index(class_index, inputs.shape[1])

    gram = dictionary.T @ dictionary
    corr = dictionary.T @ inputs
    out = np.array(codes, dtype=float)
    eye = np.eye(gram.shape[0])
    solvers = {}
    for idx in class_index:
        n_c = idx.size
        solver = solvers.get(n_c)
        if solver is None:
            solver = gram_solver(gram + (2.0 * alpha * (n_c - 1)) * eye, policy)
            solvers[n_c] = solver
        class_sum = out[:, idx].sum(axis=1)
        for col in idx:
            old = out[:, col].copy()
            rhs = corr[:, col] + 2.0 * alpha * (class_sum - old)
            new = solver(rhs)
            class_sum += new - old
            out[:, col] = new
    return out


def train_layer(
    inputs: np.ndarray,
    alpha: float,
    n_atoms: int,
    n_iters: int,
    class_index,
    init_dict: np.ndarray,
    policy: RidgePolicy = DEFAULT_RIDGE,
    stop_rel_tol: float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Alternate dictionary and code updates for one layer.

    Codes start as the dense least-squares codes against ``init_dict``; one
    iteration is one dictionary refresh followed by one full code sweep.
    The returned trace holds the objective after each iteration and is
    non-increasing. ``stop_rel_tol`` optionally ends the loop early (the
    trace is then shorter than ``n_iters``).
    """
    if init_dict.shape != (inputs.shape[0], n_atoms):
        raise ValueError(
            f"init_dict must have shape ({inputs.shape[0]}, {n_atoms}), got {init_dict.shape}"
        )
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    _check_class_index(class_index, inputs.shape[1])
    codes = ridge_code(init_dict, inputs, policy)
    dictionary = init_dict
    values = []
    for it in range(n_iters):
        dictionary = update_dictionary(inputs, codes, policy)
        codes = update_representations(dictionary, inputs, codes, alpha, class_index, policy)
        values.append(layer_objective(inputs, dictionary, codes, alpha, class_index))
        if stop_rel_tol is not None and it > 0:
            prev, last = values[-2], values[-1]
            if abs(prev - last) <= stop_rel_tol * max(1.0, abs(prev)):
                break
    return dictionary, codes, np.asarray(values)


def train_ddlic(train: LabeledMatrix, cfg: DdlicConfig = DdlicConfig()) -> DdlicModel:
    """Train the full intra-class-constrained stack greedily."""
    current = train.features
    dictionaries: list[np.ndarray] = []
    layer_reprs: list[np.ndarray] = []
    traces: list[np.ndarray] = []
    for layer, (n_atoms, alpha) in enumerate(zip(cfg.layer_sizes, cfg.alphas), start=1):
        init = initial_dictionary(current, n_atoms, layer, cfg.init, cfg.seed)
        dictionary, codes, trace = train_layer(
            current,
            alpha,
            n_atoms,
            cfg.iters_per_layer,
            train.class_index,
            init,
            cfg.ridge,
            cfg.stop_rel_tol,
        )
        dictionaries.append(dictionary)
        layer_reprs.append(codes)
        traces.append(trace)
        current = codes
    return DdlicModel(
        dictionaries,
        layer_reprs,
        cfg,
        traces,
        labels=np.array(train.original_labels),
    )
