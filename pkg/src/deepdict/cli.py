"""Command-line front end.

Subcommands: ``synth`` (generate clustered data), ``train`` (fit one model
on a whole file), ``eval`` (score a saved model on a test file),
``experiment`` (repeated random splits with aggregation), ``grid`` (scan
the compactness weight), ``export`` (dump per-layer embeddings).

Settings come from ``key=value`` config files, command-line flags, or both;
flags win. All failures exit nonzero with a single ``error: ...`` line.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .baseline import code_test_ddl, train_ddl
from .classify import KnnConfig, code_test_ddlic, evaluate_accuracy
from .data import load_labeled_matrix, make_synthetic_clusters, save_labeled_matrix
from .harness import (
    _ddl_config,
    _ddlic_config,
    build_experiment_config,
    grid_search_alpha,
    load_experiment_data,
    parse_config_file,
    run_experiment,
    export_embeddings,
)
from .intraclass import DdlicModel, train_ddlic
from .model_io import load_model, save_model

_OVERLAY_KEYS = (
    "method",
    "data",
    "format",
    "labels",
    "normalize",
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


def _gather_values(args: argparse.Namespace) -> dict[str, str]:
    """Config-file values overlaid with any flags the user supplied."""
    values = parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _OVERLAY_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value settings file; flags override it")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="labeled data file")
    p.add_argument("--format", choices=("dense", "pair"), help="data file layout")
    p.add_argument("--labels", help="separate label file (pair format)")
    p.add_argument(
        "--normalize",
        action="store_const",
        const="true",
        help="scale each sample to unit norm on load",
    )


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("ddl", "ddlic"), help="training method")
    p.add_argument("--depth", help="number of layers (must match --layer-sizes)")
    p.add_argument("--layer-sizes", dest="layer_sizes", help="comma-separated atoms per layer")
    p.add_argument("--alphas", help="per-layer compactness weights (one value broadcasts)")
    p.add_argument("--l1-weight", dest="l1_weight", help="sparsity weight for method ddl")
    p.add_argument("--iters", help="alternating updates per layer")
    p.add_argument("--init", choices=("qr", "random"), help="first-layer dictionary init")
    p.add_argument("--seed", help="base random seed")


def _add_knn_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--knn-min", dest="knn_min", help="smallest neighbor count")
    p.add_argument("--knn-max", dest="knn_max", help="largest neighbor count")
    p.add_argument(
        "--knn-selection",
        dest="knn_selection",
        choices=("best", "cv"),
        help="report the best k on the curve, or pick k by leave-one-out",
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    data = make_synthetic_clusters(
        args.classes, args.per_class, args.dim, args.separation, args.seed
    )
    save_labeled_matrix(data, args.out)
    print(
        f"wrote {data.num_samples} samples"
        f" ({data.num_classes} classes, dim {data.feature_dim}) to {args.out}"
    )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    values = _gather_values(args)
    values.pop("out", None)
    cfg = build_experiment_config(values)
    data = load_experiment_data(cfg)
    if cfg.method == "ddlic":
        model = train_ddlic(data, _ddlic_config(cfg, cfg.seed))
    else:
        model = train_ddl(data.features, _ddl_config(cfg, cfg.seed))
        model.labels = np.asarray(data.original_labels)
    save_model(model, args.out)
    print(f"saved {cfg.method} model ({data.num_samples} samples) to {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.data is None:
        raise ValueError("--data is required")
    model = load_model(args.model)
    if model.labels is None:
        raise ValueError("model has no stored training labels; cannot classify")
    data = load_labeled_matrix(
        args.data, args.format or "dense", args.labels, bool(args.normalize)
    )
    knn = KnnConfig(
        k_min=int(args.knn_min) if args.knn_min is not None else 1,
        k_max=int(args.knn_max) if args.knn_max is not None else 30,
        selection=args.knn_selection or "best",
    )
    if isinstance(model, DdlicModel):
        test_codes = code_test_ddlic(model, data.features)
    else:
        test_codes = code_test_ddl(model, data.features)
    report = evaluate_accuracy(
        model.train_repr, model.labels, test_codes, data.original_labels, knn
    )
    for k, acc in zip(report.ks, report.accuracies):
        print(f"k={k} accuracy={float(acc)!r}")
    print(f"selected k={report.selected_k} accuracy={report.selected_accuracy!r}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "accuracy_curve.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "accuracy"])
            for k, acc in zip(report.ks, report.accuracies):
                writer.writerow([k, repr(float(acc))])
        print(f"curve written to {path}")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    cfg = build_experiment_config(_gather_values(args))
    report = run_experiment(cfg)
    print(f"method: {report.method}")
    print(f"replicates: {len(report.replicates)} ({report.n_failed} failed)")
    print(f"mean_accuracy: {report.mean_accuracy!r}")
    print(f"std_accuracy: {report.std_accuracy!r}")
    for name, value in zip(report.scatter_names, report.scatter_means):
        print(f"mean_scatter_{name}: {value!r}")
    if cfg.out_dir is not None:
        print(f"report written to {cfg.out_dir}")
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    cfg = build_experiment_config(_gather_values(args))
    best, rows = grid_search_alpha(cfg)
    for row in rows:
        alphas = ",".join(repr(float(a)) for a in row.alphas)
        print(
            f"alphas={alphas} mean_accuracy={row.mean_accuracy!r}"
            f" std_accuracy={row.std_accuracy!r} failed={row.n_failed}"
        )
    print("best_alphas=" + ",".join(repr(float(a)) for a in best))
    if cfg.out_dir is not None:
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = os.path.join(cfg.out_dir, "grid.csv")
        depth = len(cfg.layer_sizes)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [f"alpha_{i}" for i in range(1, depth + 1)]
                + ["mean_accuracy", "std_accuracy", "failed"]
            )
            for row in rows:
                writer.writerow(
                    [repr(float(a)) for a in row.alphas]
                    + [repr(float(row.mean_accuracy)), repr(float(row.std_accuracy)), row.n_failed]
                )
        print(f"grid written to {path}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    if args.data is None:
        raise ValueError("--data is required")
    model = load_model(args.model)
    data = load_labeled_matrix(
        args.data, args.format or "dense", args.labels, bool(args.normalize)
    )
    paths = export_embeddings(model, data, args.out)
    print(f"wrote {len(paths)} files to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepdict",
        description="Deep dictionary learning: train, evaluate, and run experiments.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic clustered dataset")
    p.add_argument("--classes", type=int, required=True, help="number of clusters")
    p.add_argument("--per-class", dest="per_class", type=int, required=True,
                   help="samples per cluster")
    p.add_argument("--dim", type=int, required=True, help="feature dimension")
    p.add_argument("--separation", type=float, default=6.0,
                   help="smallest distance between cluster centers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output data file")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("train", help="train one model on a whole data file")
    _add_config_flag(p)
    _add_data_flags(p)
    _add_method_flags(p)
    p.add_argument("--out", required=True, help="model directory to create")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("eval", help="score a saved model on a test file")
    p.add_argument("--model", required=True, help="model directory")
    _add_data_flags(p)
    _add_knn_flags(p)
    p.add_argument("--out", help="directory for the accuracy curve CSV")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("experiment", help="repeated random splits with aggregation")
    _add_config_flag(p)
    _add_data_flags(p)
    _add_method_flags(p)
    _add_knn_flags(p)
    p.add_argument("--h", dest="h", help="training samples reserved per class")
    p.add_argument("--replicates", help="number of independent splits")
    p.add_argument("--workers", help="worker processes for replicates")
    p.add_argument("--out", help="directory for report.csv and summary.txt")
    p.set_defaults(handler=_cmd_experiment)

    p = sub.add_parser("grid", help="scan compactness weights, report the best")
    _add_config_flag(p)
    _add_data_flags(p)
    _add_method_flags(p)
    _add_knn_flags(p)
    p.add_argument("--h", dest="h", help="training samples reserved per class")
    p.add_argument("--replicates", help="number of independent splits")
    p.add_argument("--alpha-grid", dest="alpha_grid", help="comma-separated grid values")
    p.add_argument("--grid-mode", dest="grid_mode", choices=("shared", "full"),
                   help="one weight for all layers, or the full per-layer product")
    p.add_argument("--workers", help="worker processes for replicates")
    p.add_argument("--out", help="directory for grid.csv")
    p.set_defaults(handler=_cmd_grid)

    p = sub.add_parser("export", help="dump per-layer embeddings of training data")
    p.add_argument("--model", required=True, help="model directory")
    _add_data_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_help()
        return 2
    try:
        return handler(args)
    except Exception as exc:  # noqa: BLE001 - single diagnostic line, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
