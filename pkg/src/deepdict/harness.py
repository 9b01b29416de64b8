"""Experiment orchestration: repeated splits, grids, diagnostics, exports.

An experiment fixes a dataset, a method and its settings, then runs R
independent train/test splits (replicate ``r`` uses seed ``base_seed + r``),
evaluates nearest-neighbor accuracy on each, and aggregates. Everything is
deterministic given the configuration, so two runs with the same config
produce byte-identical CSV reports. Replicates are independent and can run
in worker processes; report assembly stays serialized and ordered.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baseline import DdlModel, TrainConfig, code_test_ddl, train_ddl
from .classify import KnnConfig, code_layers, code_test_ddlic, evaluate_accuracy
from .data import (
    LabeledMatrix,
    SplitSpec,
    load_labeled_matrix,
    make_synthetic_clusters,
    split_per_class,
)
from .intraclass import DdlicConfig, DdlicModel, train_ddlic

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "SyntheticSpec",
    "ExperimentConfig",
    "ReplicateResult",
    "ExperimentReport",
    "GridRow",
    "load_experiment_data",
    "evaluate_experiment",
    "run_experiment",
    "grid_search_alpha",
    "intra_class_scatter_ratio",
    "export_embeddings",
    "per_layer_accuracy",
    "parse_config_file",
    "build_experiment_config",
    "resolved_config_text",
]

DEFAULT_ALPHA_GRID = (1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.2)


@dataclass(frozen=True)
class SyntheticSpec:
    """Synthetic Gaussian-cluster dataset request."""

    classes: int
    per_class: int
    dim: int
    separation: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description: dataset, method, splits, evaluation."""

    # dataset: either a file or a synthetic spec
    data_path: str | None = None
    data_format: str = "dense"
    labels_path: str | None = None
    normalize: bool = False
    synthetic: SyntheticSpec | None = None
    # method
    method: str = "ddlic"
    layer_sizes: tuple[int, ...] = (400, 200, 100)
    alphas: tuple[float, ...] = (1e-3, 1e-3, 1e-3)
    l1_weight: float = 0.1
    iters_per_layer: int = 20
    init: str = "qr"
    seed: int = 0
    # splits
    train_per_class: int | None = None
    replicates: int = 10
    # evaluation
    knn: KnnConfig = field(default_factory=KnnConfig)
    # grid search
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    grid_mode: str = "shared"
    # execution
    workers: int = 1
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.method not in ("ddl", "ddlic"):
            raise ValueError(f"unknown method: {self.method!r}")
        if self.data_format not in ("dense", "pair"):
            raise ValueError(f"unknown data format: {self.data_format!r}")
        if self.grid_mode not in ("shared", "full"):
            raise ValueError(f"unknown grid mode: {self.grid_mode!r}")
        if any(k < 1 for k in self.layer_sizes) or not self.layer_sizes:
            raise ValueError("layer_sizes must be non-empty positive integers")
        if len(self.alphas) != len(self.layer_sizes):
            raise ValueError("alphas length must match layer_sizes")
        if any(a < 0 for a in self.alphas):
            raise ValueError("alphas must be >= 0")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be >= 0")
        if self.iters_per_layer < 1:
            raise ValueError("iters_per_layer must be >= 1")
        if self.init not in ("qr", "random"):
            raise ValueError(f"unknown init mode: {self.init!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.train_per_class is not None and self.train_per_class < 1:
            raise ValueError("train_per_class must be >= 1")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.alpha_grid or any(a < 0 for a in self.alpha_grid):
            raise ValueError("alpha_grid must be non-empty with values >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class ReplicateResult:
    """Outcome of one train/test split; failures are recorded, not raised."""

    index: int
    seed: int
    accuracy: float
    best_k: int
    scatter: tuple[tuple[str, float], ...]
    train_seconds: float
    total_seconds: float
    failed: bool
    error: str


@dataclass
class ExperimentReport:
    """Aggregate over replicates. Statistics cover non-failed replicates."""

    method: str
    alphas: tuple[float, ...]
    l1_weight: float
    replicates: list[ReplicateResult]
    mean_accuracy: float
    std_accuracy: float
    n_failed: int
    scatter_names: tuple[str, ...]
    scatter_means: tuple[float, ...]


@dataclass
class GridRow:
    alphas: tuple[float, ...]
    mean_accuracy: float
    std_accuracy: float
    n_failed: int


def load_experiment_data(cfg: ExperimentConfig) -> LabeledMatrix:
    """Materialize the configured dataset (file or synthetic)."""
    if cfg.data_path and cfg.synthetic:
        raise ValueError("configure either a data file or a synthetic dataset, not both")
    if cfg.data_path:
        return load_labeled_matrix(
            cfg.data_path, cfg.data_format, cfg.labels_path, cfg.normalize
        )
    if cfg.synthetic:
        s = cfg.synthetic
        return make_synthetic_clusters(s.classes, s.per_class, s.dim, s.separation, cfg.seed)
    raise ValueError("no dataset configured: set a data path or synthetic spec")


def _ddlic_config(cfg: ExperimentConfig, seed: int) -> DdlicConfig:
    return DdlicConfig(
        depth=len(cfg.layer_sizes),
        layer_sizes=cfg.layer_sizes,
        alphas=cfg.alphas,
        iters_per_layer=cfg.iters_per_layer,
        seed=seed,
        init=cfg.init,
    )


def _ddl_config(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        depth=len(cfg.layer_sizes),
        layer_sizes=cfg.layer_sizes,
        l1_weight=cfg.l1_weight,
        iters_per_layer=cfg.iters_per_layer,
        seed=seed,
        init=cfg.init,
    )


def intra_class_scatter_ratio(codes: np.ndarray, class_index) -> float:
    """Within-class scatter divided by total scatter of the code columns.

    Returns 0 when the total scatter is zero; a single class with nonzero
    scatter gives exactly 1.
    """
    grand_mean = codes.mean(axis=1, keepdims=True)
    centered = codes - grand_mean
    total = float(np.sum(centered * centered))
    if total == 0.0:
        return 0.0
    within = 0.0
    for idx in class_index:
        block = codes[:, idx]
        mu = block.mean(axis=1, keepdims=True)
        within += float(np.sum((block - mu) ** 2))
    return within / total


def _training_layer_stack(model, train: LabeledMatrix) -> list[tuple[str, np.ndarray]]:
    """Named training-side representations, input first."""
    stack = [("z0", train.features)]
    if isinstance(model, DdlicModel):
        stack.extend(
            (f"z{i}", codes) for i, codes in enumerate(model.layer_reprs, start=1)
        )
    else:
        stack.append((f"z{len(model.dictionaries)}", model.train_repr))
    return stack


def _run_replicate(cfg: ExperimentConfig, data: LabeledMatrix, r: int) -> ReplicateResult:
    seed = cfg.seed + r
    started = time.perf_counter()
    try:
        spec = SplitSpec(cfg.train_per_class, seed=seed, replicate_index=r)
        train, test = split_per_class(data, spec)
        if cfg.method == "ddlic":
            model = train_ddlic(train, _ddlic_config(cfg, seed))
            test_codes = code_test_ddlic(model, test.features)
        else:
            model = train_ddl(train.features, _ddl_config(cfg, seed))
            test_codes = code_test_ddl(model, test.features)
        train_seconds = time.perf_counter() - started
        report = evaluate_accuracy(
            model.train_repr,
            train.original_labels,
            test_codes,
            test.original_labels,
            cfg.knn,
        )
        scatter = tuple(
            (name, intra_class_scatter_ratio(mat, train.class_index))
            for name, mat in _training_layer_stack(model, train)
        )
        return ReplicateResult(
            index=r,
            seed=seed,
            accuracy=report.selected_accuracy,
            best_k=report.selected_k,
            scatter=scatter,
            train_seconds=train_seconds,
            total_seconds=time.perf_counter() - started,
            failed=False,
            error="",
        )
    except Exception as exc:  # noqa: BLE001 - replicate failures are reported, not fatal
        return ReplicateResult(
            index=r,
            seed=seed,
            accuracy=float("nan"),
            best_k=0,
            scatter=(),
            train_seconds=0.0,
            total_seconds=time.perf_counter() - started,
            failed=True,
            error=str(exc),
        )


def _run_replicates(cfg: ExperimentConfig, data: LabeledMatrix) -> list[ReplicateResult]:
    indices = range(1, cfg.replicates + 1)
    if cfg.workers <= 1:
        results = [_run_replicate(cfg, data, r) for r in indices]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_replicate, cfg, data, r) for r in indices]
            results = [f.result() for f in futures]
    results.sort(key=lambda res: res.index)
    return results


def evaluate_experiment(
    cfg: ExperimentConfig, data: LabeledMatrix | None = None
) -> ExperimentReport:
    """Run all replicates and aggregate, without touching the filesystem."""
    if cfg.train_per_class is None:
        raise ValueError("train_per_class (h) is required to run an experiment")
    if data is None:
        data = load_experiment_data(cfg)
    results = _run_replicates(cfg, data)
    ok = [res for res in results if not res.failed]
    if ok:
        accs = np.array([res.accuracy for res in ok])
        mean_acc = float(accs.mean())
        std_acc = float(accs.std())
        names = tuple(name for name, _ in ok[0].scatter)
        means = tuple(
            float(np.mean([dict(res.scatter)[name] for res in ok])) for name in names
        )
    else:
        mean_acc = float("nan")
        std_acc = float("nan")
        names = ()
        means = ()
    return ExperimentReport(
        method=cfg.method,
        alphas=cfg.alphas,
        l1_weight=cfg.l1_weight,
        replicates=results,
        mean_accuracy=mean_acc,
        std_accuracy=std_acc,
        n_failed=len(results) - len(ok),
        scatter_names=names,
        scatter_means=means,
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_report_files(report: ExperimentReport, cfg: ExperimentConfig) -> None:
    os.makedirs(cfg.out_dir, exist_ok=True)
    scatter_names = report.scatter_names
    with open(os.path.join(cfg.out_dir, "report.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["replicate", "seed", "accuracy", "best_k", "failed", "error"]
            + [f"scatter_{name}" for name in scatter_names]
        )
        for res in report.replicates:
            scatter_map = dict(res.scatter)
            row = [
                res.index,
                res.seed,
                "" if res.failed else _fmt(res.accuracy),
                "" if res.failed else res.best_k,
                int(res.failed),
                res.error,
            ]
            row += [
                _fmt(scatter_map[name]) if name in scatter_map else ""
                for name in scatter_names
            ]
            writer.writerow(row)

    with open(os.path.join(cfg.out_dir, "summary.txt"), "w") as fh:
        fh.write(f"method: {report.method}\n")
        if report.method == "ddlic":
            fh.write(f"alphas: {', '.join(_fmt(a) for a in report.alphas)}\n")
        else:
            fh.write(f"l1_weight: {_fmt(report.l1_weight)}\n")
        n = len(report.replicates)
        fh.write(f"replicates: {n} ({report.n_failed} failed)\n")
        fh.write(f"mean_accuracy: {_fmt(report.mean_accuracy)}\n")
        fh.write(f"std_accuracy: {_fmt(report.std_accuracy)}\n")
        for name, value in zip(report.scatter_names, report.scatter_means):
            fh.write(f"mean_scatter_{name}: {_fmt(value)}\n")
        total = sum(res.total_seconds for res in report.replicates)
        fh.write(f"wall_seconds: {total:.3f}\n")
        for res in report.replicates:
            status = "failed: " + res.error if res.failed else (
                f"accuracy={_fmt(res.accuracy)} best_k={res.best_k}"
            )
            fh.write(
                f"  replicate {res.index} (seed {res.seed}, {res.total_seconds:.3f}s): {status}\n"
            )

    with open(os.path.join(cfg.out_dir, "resolved_config.txt"), "w") as fh:
        fh.write(resolved_config_text(cfg))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the configured experiment; write report files when out_dir is set.

    Outputs: ``report.csv`` (one row per replicate; byte-identical across
    reruns of the same config), ``summary.txt`` (human-readable, includes
    wall-clock timings), and ``resolved_config.txt`` (provenance).
    """
    report = evaluate_experiment(cfg)
    if cfg.out_dir is not None:
        _write_report_files(report, cfg)
    return report


def grid_search_alpha(
    cfg: ExperimentConfig, data: LabeledMatrix | None = None
) -> tuple[tuple[float, ...], list[GridRow]]:
    """Evaluate the alpha grid and return (best alphas, full table).

    ``grid_mode="shared"`` ties every layer to one grid value (default);
    ``grid_mode="full"`` evaluates the full per-layer Cartesian product.
    The best cell is the highest mean accuracy; ties keep the earliest cell
    in grid order.
    """
    if cfg.method != "ddlic":
        raise ValueError("alpha grid search applies to method 'ddlic'")
    if data is None:
        data = load_experiment_data(cfg)
    depth = len(cfg.layer_sizes)
    if cfg.grid_mode == "shared":
        combos = [(a,) * depth for a in cfg.alpha_grid]
    else:
        combos = [tuple(c) for c in itertools.product(cfg.alpha_grid, repeat=depth)]
    rows: list[GridRow] = []
    for alphas in combos:
        report = evaluate_experiment(replace(cfg, alphas=alphas, out_dir=None), data)
        rows.append(
            GridRow(
                alphas=alphas,
                mean_accuracy=report.mean_accuracy,
                std_accuracy=report.std_accuracy,
                n_failed=report.n_failed,
            )
        )
    best = None
    for row in rows:
        score = -math.inf if math.isnan(row.mean_accuracy) else row.mean_accuracy
        if best is None or score > best[0]:
            best = (score, row)
    return best[1].alphas, rows


def export_embeddings(model, train: LabeledMatrix, out_dir: str) -> list[str]:
    """Write per-layer embeddings and labels as CSV files (samples as rows).

    Layer 0 is the raw input. Values carry 17 significant digits, so
    reloading reproduces them exactly. Returns the written paths.
    """
    stack = _training_layer_stack(model, train)
    for _, mat in stack:
        if mat.shape[1] != train.num_samples:
            raise ValueError("model codes and training data disagree on sample count")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, mat in stack:
        path = os.path.join(out_dir, f"embedding_layer_{int(name[1:]):02d}.csv")
        np.savetxt(path, mat.T, fmt="%.17g", delimiter=",")
        paths.append(path)
    labels_path = os.path.join(out_dir, "labels.csv")
    np.savetxt(labels_path, train.original_labels, fmt="%d")
    paths.append(labels_path)
    return paths


def per_layer_accuracy(
    model,
    train: LabeledMatrix,
    test: LabeledMatrix,
    knn_cfg: KnnConfig = KnnConfig(),
) -> list[float]:
    """Accuracy using each layer's codes in turn (diagnostic).

    Requires a model that stores per-layer training codes. ``train`` must be
    the data the model was trained on.
    """
    if not isinstance(model, DdlicModel):
        raise ValueError("per-layer accuracy requires a model with stored per-layer codes")
    if model.train_repr.shape[1] != train.num_samples:
        raise ValueError("model codes and training data disagree on sample count")
    coded = code_layers(model.dictionaries, test.features, model.config.ridge)
    out = []
    for layer_codes, test_layer in zip(model.layer_reprs, coded):
        report = evaluate_accuracy(
            layer_codes,
            train.original_labels,
            test_layer,
            test.original_labels,
            knn_cfg,
        )
        out.append(report.selected_accuracy)
    return out


# --- plain-text configuration files -------------------------------------

_CONFIG_KEYS = (
    "method",
    "data",
    "format",
    "labels",
    "normalize",
    "synth_classes",
    "synth_per_class",
    "synth_dim",
    "synth_separation",
    "depth",
    "layer_sizes",
    "alphas",
    "l1_weight",
    "iters",
    "init",
    "seed",
    "h",
    "replicates",
    "knn_min",
    "knn_max",
    "knn_selection",
    "alpha_grid",
    "grid_mode",
    "workers",
    "out",
)


def parse_config_file(path: str) -> dict[str, str]:
    """Read a plain-text ``key=value`` configuration file.

    Blank lines and lines starting with ``#`` are ignored. Unknown keys are
    rejected so typos fail loudly.
    """
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def _conv_int(values: dict, key: str, default: int | None) -> int | None:
    if key not in values:
        return default
    try:
        return int(values[key])
    except ValueError:
        raise ValueError(f"config key {key!r}: expected an integer, got {values[key]!r}") from None


def _conv_float(values: dict, key: str, default: float | None) -> float | None:
    if key not in values:
        return default
    try:
        return float(values[key])
    except ValueError:
        raise ValueError(f"config key {key!r}: expected a number, got {values[key]!r}") from None


def _conv_bool(values: dict, key: str, default: bool) -> bool:
    if key not in values:
        return default
    text = values[key].lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"config key {key!r}: expected a boolean, got {values[key]!r}")


def _conv_int_list(values: dict, key: str, default: tuple[int, ...] | None) -> tuple[int, ...] | None:
    if key not in values:
        return default
    try:
        return tuple(int(tok) for tok in values[key].split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"config key {key!r}: expected comma-separated integers") from None


def _conv_float_list(values: dict, key: str, default: tuple[float, ...] | None) -> tuple[float, ...] | None:
    if key not in values:
        return default
    try:
        return tuple(float(tok) for tok in values[key].split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"config key {key!r}: expected comma-separated numbers") from None


def build_experiment_config(values: dict[str, str]) -> ExperimentConfig:
    """Turn raw ``key=value`` strings into a validated ExperimentConfig."""
    unknown = set(values) - set(_CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")

    layer_sizes = _conv_int_list(values, "layer_sizes", (400, 200, 100))
    depth = _conv_int(values, "depth", len(layer_sizes))
    if depth != len(layer_sizes):
        raise ValueError(
            f"depth={depth} does not match layer_sizes of length {len(layer_sizes)}"
        )
    alphas = _conv_float_list(values, "alphas", (1e-3,) * depth)
    if len(alphas) == 1 and depth > 1:
        alphas = alphas * depth
    if len(alphas) != depth:
        raise ValueError(f"alphas must have 1 or {depth} values, got {len(alphas)}")

    synth_keys = ("synth_classes", "synth_per_class", "synth_dim", "synth_separation")
    synthetic = None
    if any(key in values for key in synth_keys):
        missing = [key for key in synth_keys if key not in values]
        if missing:
            raise ValueError(f"synthetic dataset needs: {', '.join(missing)}")
        synthetic = SyntheticSpec(
            classes=_conv_int(values, "synth_classes", None),
            per_class=_conv_int(values, "synth_per_class", None),
            dim=_conv_int(values, "synth_dim", None),
            separation=_conv_float(values, "synth_separation", None),
        )
    data_path = values.get("data") or None
    if data_path and synthetic:
        raise ValueError("configure either data= or synth_*, not both")
    if not data_path and not synthetic:
        raise ValueError("no dataset configured: set data= or the synth_* keys")

    knn = KnnConfig(
        k_min=_conv_int(values, "knn_min", 1),
        k_max=_conv_int(values, "knn_max", 30),
        selection=values.get("knn_selection", "best"),
    )
    return ExperimentConfig(
        data_path=data_path,
        data_format=values.get("format", "dense"),
        labels_path=values.get("labels") or None,
        normalize=_conv_bool(values, "normalize", False),
        synthetic=synthetic,
        method=values.get("method", "ddlic"),
        layer_sizes=layer_sizes,
        alphas=alphas,
        l1_weight=_conv_float(values, "l1_weight", 0.1),
        iters_per_layer=_conv_int(values, "iters", 20),
        init=values.get("init", "qr"),
        seed=_conv_int(values, "seed", 0),
        train_per_class=_conv_int(values, "h", None),
        replicates=_conv_int(values, "replicates", 10),
        knn=knn,
        alpha_grid=_conv_float_list(values, "alpha_grid", DEFAULT_ALPHA_GRID),
        grid_mode=values.get("grid_mode", "shared"),
        workers=_conv_int(values, "workers", 1),
        out_dir=values.get("out") or None,
    )


def resolved_config_text(cfg: ExperimentConfig) -> str:
    """Render a config as sorted ``key=value`` lines; parses back to itself."""
    lines = [
        f"method={cfg.method}",
        f"format={cfg.data_format}",
        f"normalize={'true' if cfg.normalize else 'false'}",
        f"depth={len(cfg.layer_sizes)}",
        "layer_sizes=" + ",".join(str(k) for k in cfg.layer_sizes),
        "alphas=" + ",".join(_fmt(a) for a in cfg.alphas),
        f"l1_weight={_fmt(cfg.l1_weight)}",
        f"iters={cfg.iters_per_layer}",
        f"init={cfg.init}",
        f"seed={cfg.seed}",
        f"replicates={cfg.replicates}",
        f"knn_min={cfg.knn.k_min}",
        f"knn_max={cfg.knn.k_max}",
        f"knn_selection={cfg.knn.selection}",
        "alpha_grid=" + ",".join(_fmt(a) for a in cfg.alpha_grid),
        f"grid_mode={cfg.grid_mode}",
        f"workers={cfg.workers}",
    ]
    if cfg.data_path:
        lines.append(f"data={cfg.data_path}")
    if cfg.labels_path:
        lines.append(f"labels={cfg.labels_path}")
    if cfg.synthetic:
        lines += [
            f"synth_classes={cfg.synthetic.classes}",
            f"synth_per_class={cfg.synthetic.per_class}",
            f"synth_dim={cfg.synthetic.dim}",
            f"synth_separation={_fmt(cfg.synthetic.separation)}",
        ]
    if cfg.train_per_class is not None:
        lines.append(f"h={cfg.train_per_class}")
    if cfg.out_dir is not None:
        lines.append(f"out={cfg.out_dir}")
    return "\n".join(sorted(lines)) + "\n"
