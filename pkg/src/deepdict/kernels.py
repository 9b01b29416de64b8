"""Dense linear-algebra kernels shared by the layer-wise trainers.

Everything here is a pure function of its inputs plus an explicit seed
where randomness is involved, so kernels can run concurrently on shared
read-only matrices. Samples are columns throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

__all__ = [
    "RidgePolicy",
    "DEFAULT_RIDGE",
    "IstaConfig",
    "gram_solver",
    "solve_least_squares_dictionary",
    "ridge_code",
    "qr_orthonormal_init",
    "random_dictionary_init",
    "initial_dictionary",
    "gram_spectral_norm",
    "ista_sparse_code",
    "sparse_objective",
]


@dataclass(frozen=True)
class RidgePolicy:
    """Stabilization for Gram-matrix solves.

    Before factorization, ``epsilon_scale * mean(diag(G))`` is added to the
    diagonal of a Gram matrix ``G``. The default keeps the perturbation ten
    orders of magnitude below the data scale: well-posed solves are
    unaffected while rank-deficient ones degrade gracefully toward the
    pseudo-inverse solution.
    """

    epsilon_scale: float = 1e-10

    def __post_init__(self) -> None:
        if self.epsilon_scale < 0:
            raise ValueError("epsilon_scale must be >= 0")


DEFAULT_RIDGE = RidgePolicy()


def gram_solver(gram: np.ndarray, policy: RidgePolicy = DEFAULT_RIDGE) -> Callable[[np.ndarray], np.ndarray]:
    """Return a solver for ``(gram + eps*I) x = rhs``.

    Symmetric positive-definite (Cholesky) factorization of the ridged Gram
    matrix is the primary path; on factorization failure the solver falls
    back to the pseudo-inverse of the raw Gram matrix. The returned callable
    accepts a vector or a matrix right-hand side and can be reused across
    many solves against the same Gram matrix.
    """
    k = gram.shape[0]
    if gram.shape != (k, k):
        raise ValueError("gram must be square")
    eps = policy.epsilon_scale * (float(np.trace(gram)) / k if k else 0.0)
    try:
        factor = scipy.linalg.cho_factor(gram + eps * np.eye(k))
    except np.linalg.LinAlgError:
        try:
            pseudo = np.linalg.pinv(gram)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "Gram matrix factorization failed even after ridge stabilization"
            ) from exc
        return lambda rhs: pseudo @ rhs
    return lambda rhs: scipy.linalg.cho_solve(factor, rhs)


def solve_least_squares_dictionary(
    inputs: np.ndarray,
    codes: np.ndarray,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> np.ndarray:
    """Best reconstruction dictionary for ``inputs ~ dictionary @ codes``.

    Minimizes the squared Frobenius reconstruction error over the dictionary
    with the codes held fixed, via the normal equations on the code Gram
    matrix.
    """
    if inputs.ndim != 2 or codes.ndim != 2:
        raise ValueError("inputs and codes must be 2-D matrices")
    if inputs.shape[1] != codes.shape[1]:
        raise ValueError(
            f"column counts differ: inputs has {inputs.shape[1]}, codes has {codes.shape[1]}"
        )
    if codes.shape[0] < 1:
        raise ValueError("codes must have at least one row")
    gram = codes @ codes.T
    cross = inputs @ codes.T
    return gram_solver(gram, policy)(cross.T).T


def ridge_code(
    dictionary: np.ndarray,
    inputs: np.ndarray,
    policy: RidgePolicy = DEFAULT_RIDGE,
) -> np.ndarray:
    """Dense least-squares codes for ``inputs ~ dictionary @ codes``."""
    if dictionary.ndim != 2 or inputs.ndim != 2:
        raise ValueError("dictionary and inputs must be 2-D matrices")
    if dictionary.shape[0] != inputs.shape[0]:
        raise ValueError(
            f"row counts differ: dictionary has {dictionary.shape[0]}, inputs has {inputs.shape[0]}"
        )
    return gram_solver(dictionary.T @ dictionary, policy)(dictionary.T @ inputs)


def qr_orthonormal_init(data: np.ndarray, n_atoms: int, seed: int = 0) -> np.ndarray:
    """Orthonormal starting dictionary from a QR factorization of the data.

    Returns the first ``n_atoms`` columns of an orthonormal basis whose
    leading columns come from the data itself. If the numerical rank of the
    data is below ``n_atoms``, the basis is padded with seeded random
    directions and re-orthonormalized, so the result always has exactly
    orthonormal columns.
    """
    if data.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    k0, n = data.shape
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if n_atoms > k0:
        raise ValueError(
            f"cannot build {n_atoms} orthonormal columns in {k0}-dimensional space"
        )
    if n == 0:
        rank = 0
        basis = np.empty((k0, 0))
    else:
        basis, _ = np.linalg.qr(data)
        svals = np.linalg.svd(data, compute_uv=False)
        tol = max(k0, n) * np.finfo(float).eps * (float(svals[0]) if svals.size else 0.0)
        rank = int(np.count_nonzero(svals > tol))
    if rank >= n_atoms:
        return basis[:, :n_atoms].copy()
    rng = np.random.default_rng(seed)
    pad = rng.standard_normal((k0, n_atoms - rank))
    padded, _ = np.linalg.qr(np.concatenate([basis[:, :rank], pad], axis=1))
    return padded[:, :n_atoms]


def random_dictionary_init(rows: int, cols: int, seed: int = 0) -> np.ndarray:
    """Seeded Gaussian dictionary with unit-norm columns."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    atoms = np.random.default_rng(seed).standard_normal((rows, cols))
    norms = np.linalg.norm(atoms, axis=0)
    norms[norms == 0] = 1.0
    return atoms / norms


def initial_dictionary(
    inputs: np.ndarray,
    n_atoms: int,
    layer: int,
    mode: str,
    seed: int,
) -> np.ndarray:
    """Starting dictionary for one layer of a greedy stack.

    ``mode="qr"`` uses an orthonormal basis of the layer input for the first
    layer and seeded random unit-norm atoms for deeper layers;
    ``mode="random"`` uses random atoms everywhere. Deterministic in
    (inputs, layer, seed), and shared by both trainers so that runs with the
    same seed start identically.
    """
    if mode not in ("qr", "random"):
        raise ValueError(f"unknown init mode: {mode!r}")
    if layer < 1:
        raise ValueError("layer numbering starts at 1")
    if mode == "qr" and layer == 1:
        return qr_orthonormal_init(inputs, n_atoms, seed + layer)
    return random_dictionary_init(inputs.shape[0], n_atoms, seed + layer)


@dataclass(frozen=True)
class IstaConfig:
    """Iterative soft-thresholding settings.

    ``step=None`` derives the step size from the dictionary's spectral norm
    by power iteration; a fixed positive step can be supplied instead.
    Iteration stops early once the relative change of the iterate drops
    below ``rel_tol``.
    """

    max_iters: int = 500
    rel_tol: float = 1e-6
    step: float | None = None

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be > 0 when given")


def gram_spectral_norm(gram: np.ndarray, iters: int = 50, tol: float = 1e-8) -> float:
    """Largest eigenvalue of a symmetric PSD matrix, by power iteration."""
    k = gram.shape[0]
    v = np.random.default_rng(0).standard_normal(k)
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    v /= nv
    estimate = 0.0
    for _ in range(iters):
        w = gram @ v
        new_estimate = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(new_estimate - estimate) <= tol * abs(new_estimate):
            return max(new_estimate, 0.0)
        estimate = new_estimate
    return max(estimate, 0.0)


def sparse_objective(
    dictionary: np.ndarray,
    inputs: np.ndarray,
    codes: np.ndarray,
    l1_weight: float,
) -> float:
    """Squared reconstruction error plus the weighted L1 norm of the codes."""
    resid = inputs - dictionary @ codes
    return float(np.sum(resid * resid) + l1_weight * np.abs(codes).sum())


def ista_sparse_code(
    dictionary: np.ndarray,
    inputs: np.ndarray,
    l1_weight: float,
    cfg: IstaConfig = IstaConfig(),
    warm_start: np.ndarray | None = None,
    return_trace: bool = False,
):
    """Sparse codes minimizing reconstruction error plus an L1 penalty.

    Solves ``min_Z ||inputs - dictionary @ Z||_F^2 + l1_weight * ||Z||_1``
    by proximal gradient (soft-thresholding) steps. With the auto-derived
    step the objective is non-increasing across iterations. When
    ``return_trace`` is true, also returns the objective value at the start
    and after every iteration.
    """
    if dictionary.ndim != 2 or inputs.ndim != 2:
        raise ValueError("dictionary and inputs must be 2-D matrices")
    if dictionary.shape[0] != inputs.shape[0]:
        raise ValueError(
            f"row counts differ: dictionary has {dictionary.shape[0]}, inputs has {inputs.shape[0]}"
        )
    if l1_weight < 0:
        raise ValueError("l1_weight must be >= 0")
    n_atoms = dictionary.shape[1]
    n_samples = inputs.shape[1]
    if n_samples == 0:
        empty = np.zeros((n_atoms, 0))
        return (empty, np.zeros(0)) if return_trace else empty

    gram = dictionary.T @ dictionary
    corr = dictionary.T @ inputs
    if cfg.step is None:
        spectral = gram_spectral_norm(gram)
        if spectral <= 0:
            raise ValueError("dictionary has zero spectral norm; cannot derive a step size")
        step = 1.0 / spectral
    else:
        step = cfg.step

    if warm_start is None:
        codes = np.zeros((n_atoms, n_samples))
    else:
        if warm_start.shape != (n_atoms, n_samples):
            raise ValueError("warm_start has the wrong shape")
        codes = np.array(warm_start, dtype=float)

    threshold = 0.5 * step * l1_weight
    trace = [sparse_objective(dictionary, inputs, codes, l1_weight)] if return_trace else None
    for _ in range(cfg.max_iters):
        # gradient of 0.5 * ||inputs - dictionary @ codes||_F^2
        grad = gram @ codes - corr
        shifted = codes - step * grad
        new_codes = np.sign(shifted) * np.maximum(np.abs(shifted) - threshold, 0.0)
        delta = float(np.linalg.norm(new_codes - codes))
        reference = float(np.linalg.norm(codes))
        codes = new_codes
        if return_trace:
            trace.append(sparse_objective(dictionary, inputs, codes, l1_weight))
        if delta <= cfg.rel_tol * reference:
            break
    if return_trace:
        return codes, np.asarray(trace)
    return codes
