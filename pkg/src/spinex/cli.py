"""The ``spinex`` command line: gen, fit, predict, explain, bench.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors (bad files,
malformed cells, impossible specs), 3 on other runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace

import numpy as np

from . import modelio
from .bench import BUILTIN_SUITES, builtin_suite, emit_report, run_experiment, spec_from_manifest
from .data import CLASSIFICATION, REGRESSION, load_csv, load_matrix_csv
from .ensemble import fit_bagging, fit_boosting, fit_stacking
from .errors import DataError, DimensionMismatch, SpinexError
from .explain import build_report
from .figures import render_explanation
from .predictor import ENSEMBLE_NONE, SpinexConfig, fit
from .synthgen import (
    REGRESSION_FAMILIES,
    ClassificationGenSpec,
    RegressionGenSpec,
    export_csv,
    gen_classification,
    gen_regression,
)

USAGE_EXIT = 1
DATA_EXIT = 2
RUNTIME_EXIT = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="spinex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[], help="generate a synthetic dataset CSV")
    gen.add_argument("--family", required=True,
                     choices=list(REGRESSION_FAMILIES) + ["classification"])
    gen.add_argument("--n", type=int, required=True, help="number of samples")
    gen.add_argument("--features", type=int, required=True)
    gen.add_argument("--informative", type=int, default=None)
    gen.add_argument("--redundant", type=int, default=0)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--outliers", type=int, default=0)
    gen.add_argument("--bias", type=float, default=0.0)
    gen.add_argument("--no-shuffle", action="store_true")
    gen.add_argument("--effective-rank", type=int, default=None)
    gen.add_argument("--tail-strength", type=float, default=0.5)
    gen.add_argument("--weights", default="0.5,0.5", help="class proportions, e.g. 0.9,0.1")
    gen.add_argument("--flip-y", type=float, default=0.01)
    gen.add_argument("--class-sep", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    fit_p = sub.add_parser("fit", help="fit a model and save the blob")
    fit_p.add_argument("--task", required=True, choices=[REGRESSION, CLASSIFICATION])
    fit_p.add_argument("--data", required=True)
    fit_p.add_argument("--target", required=True)
    fit_p.add_argument("--config", default=None, help="JSON file mirroring SpinexConfig fields")
    fit_p.add_argument("--ensemble-members", type=int, default=10)
    fit_p.add_argument("--sample-fraction", type=float, default=1.0)
    fit_p.add_argument("--learning-rate", type=float, default=1.0)
    fit_p.add_argument("--stack-folds", type=int, default=5)
    fit_p.add_argument("--seed", type=int, default=0)
    fit_p.add_argument("--out", required=True)

    pred = sub.add_parser("predict", help="predict with a saved model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True)
    pred.add_argument("--out", required=True)

    exp = sub.add_parser("explain", help="contribution/interaction report for a saved model")
    exp.add_argument("--model", required=True)
    exp.add_argument("--data", required=True)
    exp.add_argument("--instance", type=int, default=None)
    exp.add_argument("--combinations", type=int, default=None,
                     help="max feature-subset size for combination impacts")
    exp.add_argument("--out", required=True)
    exp.add_argument("--svg", default=None, help="directory for figure files")

    bench = sub.add_parser("bench", help="run a benchmark suite and emit reports")
    group = bench.add_mutually_exclusive_group(required=True)
    group.add_argument("--suite", choices=list(BUILTIN_SUITES))
    group.add_argument("--manifest", help="custom experiment manifest (JSON)")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--formats", default="json,csv,md")
    bench.add_argument("--out", default=None,
                       help="output directory (falls back to the manifest's out_dir)")
    bench.add_argument("--per-fold", action="store_true")

    return parser


def _cmd_gen(args) -> int:
    if args.family == "classification":
        spec = ClassificationGenSpec(
            n_samples=args.n,
            n_features=args.features,
            n_informative=args.informative if args.informative is not None else args.features,
            n_redundant=args.redundant,
            weights=tuple(float(w) for w in args.weights.split(",")),
            flip_y=args.flip_y,
            class_sep=args.class_sep,
            seed=args.seed,
        )
        dataset = gen_classification(spec)
    else:
        spec = RegressionGenSpec(
            family=args.family,
            n_samples=args.n,
            n_features=args.features,
            n_informative=args.informative,
            noise=args.noise,
            n_outliers=args.outliers,
            bias=args.bias,
            shuffle=not args.no_shuffle,
            effective_rank=args.effective_rank,
            tail_strength=args.tail_strength,
            seed=args.seed,
        )
        dataset = gen_regression(spec)
    export_csv(dataset, args.out, spec)
    print(f"wrote {dataset.n_samples}x{dataset.n_features} dataset to {args.out}")
    return 0


def _load_config(path: str | None) -> SpinexConfig:
    if path is None:
        return SpinexConfig()
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return modelio.config_from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad config file {path}: {exc}") from exc


def _cmd_fit(args) -> int:
    config = _load_config(args.config)
    dataset = load_csv(args.data, args.target, args.task)
    if config.ensemble_method == ENSEMBLE_NONE:
        model = fit(config, dataset)
    elif config.ensemble_method == "bagging":
        model = fit_bagging(config, dataset, args.ensemble_members,
                            args.sample_fraction, seed=args.seed)
    elif config.ensemble_method == "boosting":
        model = fit_boosting(config, dataset, args.ensemble_members,
                             args.learning_rate, seed=args.seed)
    else:
        # a small neighborhood spread around the configured k
        ks = sorted({max(1, config.n_neighbors // 2), config.n_neighbors, config.n_neighbors * 2})
        bases = [replace(config, ensemble_method=ENSEMBLE_NONE, n_neighbors=k) for k in ks]
        model = fit_stacking(bases, dataset, args.stack_folds, seed=args.seed)
    modelio.save(model, args.out)
    print(f"fitted {type(model).__name__} on {dataset.n_samples} rows -> {args.out}")
    return 0


def _query_rows(model, path: str) -> np.ndarray:
    """Align a CSV's columns with the model's feature names; extra columns
    (such as the original target) are dropped."""
    header, matrix = load_matrix_csv(path)
    positions = []
    for name in model.feature_names:
        if name not in header:
            raise DimensionMismatch(f"query file is missing feature column {name!r}")
        positions.append(header.index(name))
    return matrix[:, positions]


def _cmd_predict(args) -> int:
    model = modelio.load(args.model)
    X = _query_rows(model, args.data)
    preds = model.predict(X)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction"])
        for value in preds:
            writer.writerow([int(value) if np.issubdtype(type(value), np.integer) else repr(float(value))])
    print(f"wrote {len(preds)} predictions to {args.out}")
    return 0


def _cmd_explain(args) -> int:
    model = modelio.load(args.model)
    if not hasattr(model, "feature_means"):
        raise SpinexError("explain requires a single SPINEX model, not an ensemble blob")
    X = _query_rows(model, args.data)
    report = build_report(model, X, instance=args.instance,
                          max_combination_size=args.combinations)
    doc = report.to_dict()
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    print(f"wrote explanation report to {args.out}")
    if args.svg:
        import os

        os.makedirs(args.svg, exist_ok=True)
        paths = render_explanation(doc, args.svg)
        print(f"wrote {len(paths)} figures to {args.svg}")
    return 0


def _cmd_bench(args) -> int:
    if args.suite:
        spec = builtin_suite(args.suite, args.seed)
    else:
        with open(args.manifest, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        manifest.setdefault("seed", args.seed)
        spec = spec_from_manifest(manifest)
    out_dir = args.out or spec.out_dir
    if not out_dir:
        print("spinex bench: error: no output directory (pass --out or set out_dir "
              "in the manifest)", file=sys.stderr)
        return USAGE_EXIT
    try:
        report = run_experiment(spec)
    except Exception as exc:
        _write_partial_marker(out_dir, spec.suite, exc)
        raise
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    paths = emit_report(report, formats, out_dir, per_fold=args.per_fold)
    print(f"suite {spec.suite}: {len(report.datasets)} datasets x {len(spec.models)} models")
    print(f"determinism hash: {report.determinism_hash}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _write_partial_marker(out_dir: str, suite: str, exc: Exception):
    """Leave a marker noting the aborted run next to any partial output."""
    import os

    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "partial_report.marker.json"), "w",
                  encoding="utf-8") as fh:
            json.dump({"suite": suite, "error": str(exc),
                       "error_type": type(exc).__name__}, fh, indent=2)
    except OSError:
        pass  # the abort path must never mask the original failure


_COMMANDS = {
    "gen": _cmd_gen,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "explain": _cmd_explain,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DataError, FileNotFoundError) as exc:
        print(f"spinex: data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except SpinexError as exc:
        print(f"spinex: error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except json.JSONDecodeError as exc:
        print(f"spinex: data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except ValueError as exc:
        print(f"spinex: invalid value: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
