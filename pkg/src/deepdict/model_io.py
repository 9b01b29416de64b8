"""Directory serialization for trained models.

A model directory holds one plain-text matrix file per dictionary, the
stored training codes, an optional training-label file, and a JSON
metadata file. Matrices are written with 17 significant digits, so a
save/load round trip reproduces every float exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .baseline import DdlModel, TrainConfig
from .intraclass import DdlicConfig, DdlicModel
from .kernels import IstaConfig, RidgePolicy

__all__ = ["save_model", "load_model"]

_MATRIX_FMT = "%.17g"


def _write_matrix(path: str, matrix: np.ndarray) -> None:
    np.savetxt(path, matrix, fmt=_MATRIX_FMT)


def _read_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)


def save_model(model, out_dir: str) -> None:
    """Serialize a trained model into a directory (created if missing)."""
    os.makedirs(out_dir, exist_ok=True)
    if isinstance(model, DdlicModel):
        cfg = model.config
        meta = {
            "kind": "ddlic",
            "depth": cfg.depth,
            "layer_sizes": list(cfg.layer_sizes),
            "alphas": [float(a) for a in cfg.alphas],
            "iters_per_layer": cfg.iters_per_layer,
            "seed": cfg.seed,
            "init": cfg.init,
            "ridge_epsilon_scale": cfg.ridge.epsilon_scale,
            "stop_rel_tol": cfg.stop_rel_tol,
            "traces": [[float(v) for v in t] for t in model.traces],
        }
        for i, codes in enumerate(model.layer_reprs, start=1):
            _write_matrix(os.path.join(out_dir, f"layer_repr_{i:02d}.txt"), codes)
    elif isinstance(model, DdlModel):
        cfg = model.config
        meta = {
            "kind": "ddl",
            "depth": cfg.depth,
            "layer_sizes": list(cfg.layer_sizes),
            "l1_weight": float(cfg.l1_weight),
            "iters_per_layer": cfg.iters_per_layer,
            "seed": cfg.seed,
            "init": cfg.init,
            "ridge_epsilon_scale": cfg.ridge.epsilon_scale,
            "ista": {
                "max_iters": cfg.ista.max_iters,
                "rel_tol": cfg.ista.rel_tol,
                "step": cfg.ista.step,
            },
            "traces": [[float(v) for v in t] for t in model.traces],
        }
        _write_matrix(os.path.join(out_dir, "train_repr.txt"), model.train_repr)
    else:
        raise TypeError(f"cannot serialize object of type {type(model).__name__}")

    for i, dictionary in enumerate(model.dictionaries, start=1):
        _write_matrix(os.path.join(out_dir, f"dictionary_{i:02d}.txt"), dictionary)
    if model.labels is not None:
        np.savetxt(os.path.join(out_dir, "train_labels.txt"), model.labels, fmt="%d")
    with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(model_dir: str):
    """Load a model directory written by :func:`save_model`."""
    meta_path = os.path.join(model_dir, "metadata.json")
    if not os.path.isfile(meta_path):
        raise FileNotFoundError(f"{model_dir}: no metadata.json; not a model directory")
    with open(meta_path) as fh:
        meta = json.load(fh)

    depth = int(meta["depth"])
    dictionaries = [
        _read_matrix(os.path.join(model_dir, f"dictionary_{i:02d}.txt"))
        for i in range(1, depth + 1)
    ]
    labels_path = os.path.join(model_dir, "train_labels.txt")
    labels = None
    if os.path.isfile(labels_path):
        labels = np.loadtxt(labels_path, dtype=np.int64, ndmin=1)
    traces = [np.asarray(t, dtype=float) for t in meta["traces"]]
    ridge = RidgePolicy(epsilon_scale=float(meta["ridge_epsilon_scale"]))

    kind = meta["kind"]
    if kind == "ddlic":
        cfg = DdlicConfig(
            depth=depth,
            layer_sizes=tuple(int(k) for k in meta["layer_sizes"]),
            alphas=tuple(float(a) for a in meta["alphas"]),
            iters_per_layer=int(meta["iters_per_layer"]),
            seed=int(meta["seed"]),
            init=meta["init"],
            ridge=ridge,
            stop_rel_tol=meta["stop_rel_tol"],
        )
        layer_reprs = [
            _read_matrix(os.path.join(model_dir, f"layer_repr_{i:02d}.txt"))
            for i in range(1, depth + 1)
        ]
        return DdlicModel(dictionaries, layer_reprs, cfg, traces, labels=labels)
    if kind == "ddl":
        ista_meta = meta["ista"]
        cfg = TrainConfig(
            depth=depth,
            layer_sizes=tuple(int(k) for k in meta["layer_sizes"]),
            l1_weight=float(meta["l1_weight"]),
            iters_per_layer=int(meta["iters_per_layer"]),
            seed=int(meta["seed"]),
            init=meta["init"],
            ista=IstaConfig(
                max_iters=int(ista_meta["max_iters"]),
                rel_tol=float(ista_meta["rel_tol"]),
                step=ista_meta["step"],
            ),
            ridge=ridge,
        )
        train_repr = _read_matrix(os.path.join(model_dir, "train_repr.txt"))
        return DdlModel(dictionaries, train_repr, cfg, traces, labels=labels)
    raise ValueError(f"{model_dir}: unknown model kind {kind!r}")
