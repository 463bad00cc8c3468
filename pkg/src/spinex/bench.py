"""Experiment orchestration: CV protocol, model zoo, reports, and ranking.

The pipeline is leak-free by construction: every model (and its internal
preprocessing and feature selection) is fit per training fold; test folds
are never filtered, and their missing values are imputed with training-fold
column means. Fit and predict are timed per fold with a monotonic clock;
timing-valued fields (and the cost-group rank table derived from them) are
excluded from the report's determinism hash.
"""

from __future__ import annotations

import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import modelio
from .cv import kfold_split, stratified_kfold_split
from .data import CLASSIFICATION, REGRESSION, Dataset, check_health, load_csv
from .ensemble import fit_bagging, fit_boosting, fit_stacking
from .errors import InvalidSpec, IoError
from .evalrank import (
    CLASSIFICATION_ACCURACY_GROUP,
    COST_GROUP,
    REGRESSION_ACCURACY_GROUP,
    MetricRecord,
    accuracy,
    auc,
    estimated_energy,
    logloss,
    mae,
    r2,
    rank_models,
)
from .predictor import (
    SpinexConfig,
    classifier_defaults,
    classifier_tuned,
    fit,
    regressor_defaults,
)
from .similarity import EUCLIDEAN, MANHATTAN, top_k_indices, _distance_block
from .synthgen import (
    ClassificationGenSpec,
    RegressionGenSpec,
    gen_classification,
    gen_regression,
    table3_specs,
    table5a_specs,
    table5b_specs,
)

BUILTIN_SUITES = ("synthetic-regression", "synthetic-classification-a", "synthetic-classification-b")

_TIMING_KEYS = frozenset(
    {"train_time_s", "predict_time_s", "total_time_s", "preprocess_time_s", "estimated_energy"}
)


# --- plain kNN baseline -------------------------------------------------------

@dataclass(frozen=True)
class BaselineKnnModel:
    """Unweighted k-nearest-neighbor comparator with SPINEX's tie-breaks."""

    k: int
    metric: str
    task: str
    train_features: np.ndarray
    train_targets: np.ndarray
    class_labels: np.ndarray | None

    def _neighbors(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        D = _distance_block(X, self.train_features, self.metric)
        idx, _ = top_k_indices(D, min(self.k, len(self.train_targets)))
        return idx

    def predict(self, X: np.ndarray) -> np.ndarray:
        idx = self._neighbors(X)
        targets = self.train_targets[idx]
        if self.task == REGRESSION:
            return targets.mean(axis=1)
        K = len(self.class_labels)
        out = np.empty(idx.shape[0], dtype=int)
        for i in range(idx.shape[0]):
            counts = np.bincount(np.searchsorted(self.class_labels, targets[i]), minlength=K)
            out[i] = self.class_labels[int(np.argmax(counts))]
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        idx = self._neighbors(X)
        K = len(self.class_labels)
        probs = np.zeros((idx.shape[0], K))
        for i in range(idx.shape[0]):
            counts = np.bincount(
                np.searchsorted(self.class_labels, self.train_targets[idx[i]]), minlength=K
            )
            probs[i] = counts / counts.sum()
        return probs


def baseline_knn(k: int, metric: str, d: Dataset) -> BaselineKnnModel:
    """Fit the plain kNN baseline; NaNs are filled with column means."""
    feats = np.array(d.features, copy=True)
    nan_mask = np.isnan(feats)
    if nan_mask.any():
        means = np.nanmean(feats, axis=0)
        feats = np.where(nan_mask, means[None, :], feats)
    labels = np.unique(d.targets) if d.task == CLASSIFICATION else None
    return BaselineKnnModel(k=k, metric=metric, task=d.task, train_features=feats,
                            train_targets=d.targets, class_labels=labels)


def _baseline_bytes(m: BaselineKnnModel) -> bytes:
    doc = {
        "format": "spinex-baseline-knn",
        "k": m.k,
        "metric": m.metric,
        "task": m.task,
        "train_features": m.train_features.tolist(),
        "train_targets": m.train_targets.tolist(),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


# --- experiment specification ---------------------------------------------------

@dataclass(frozen=True)
class DatasetSource:
    """One dataset: generated, loaded from CSV, or supplied directly."""

    name: str
    generator: RegressionGenSpec | ClassificationGenSpec | None = None
    csv_path: str | None = None
    csv_target: str | None = None
    csv_task: str | None = None
    dataset: Dataset | None = None

    def materialize(self) -> Dataset:
        if self.dataset is not None:
            return self.dataset
        if self.generator is not None:
            if isinstance(self.generator, RegressionGenSpec):
                return gen_regression(self.generator)
            return gen_classification(self.generator)
        return load_csv(self.csv_path, self.csv_target, self.csv_task)


@dataclass(frozen=True)
class ModelSpec:
    """A named model in the zoo; ``params`` depend on the kind."""

    name: str
    kind: str  # spinex | baseline_knn | bagging | boosting | stacking
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentSpec:
    suite: str
    datasets: list[DatasetSource]
    models: list[ModelSpec]
    cv: dict  # {"kfold": k} or {"stratified_kfold": k}
    seed: int = 0
    out_dir: str | None = None  # default emission target; the CLI overrides

    def __post_init__(self):
        if not self.datasets or not self.models:
            raise InvalidSpec("an experiment needs at least one dataset and one model")
        if len(self.cv) != 1 or next(iter(self.cv)) not in ("kfold", "stratified_kfold"):
            raise InvalidSpec('cv must be {"kfold": k} or {"stratified_kfold": k}')
        if next(iter(self.cv.values())) < 2:
            raise InvalidSpec("cv needs k >= 2")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise InvalidSpec("dataset names must be unique")
        model_names = [m.name for m in self.models]
        if len(set(model_names)) != len(model_names):
            raise InvalidSpec("model names must be unique")


@dataclass
class _Adapter:
    fit: Callable[[Dataset], Any]
    predict: Callable[[Any, np.ndarray], np.ndarray]
    predict_proba: Callable[[Any, np.ndarray], np.ndarray] | None
    blob: Callable[[Any], bytes]


def _spinex_adapter(config: SpinexConfig) -> _Adapter:
    return _Adapter(
        fit=lambda d: fit(config, d),
        predict=lambda m, X: m.predict(X),
        predict_proba=lambda m, X: m.predict_proba(X),
        blob=modelio.serialize,
    )


def build_adapter(spec: ModelSpec, seed: int) -> _Adapter:
    params = dict(spec.params)
    if spec.kind == "spinex":
        return _spinex_adapter(params["config"])
    if spec.kind == "baseline_knn":
        k = params.get("k", 5)
        metric = params.get("metric", MANHATTAN)
        return _Adapter(
            fit=lambda d: baseline_knn(k, metric, d),
            predict=lambda m, X: m.predict(X),
            predict_proba=lambda m, X: m.predict_proba(X),
            blob=_baseline_bytes,
        )
    if spec.kind == "bagging":
        cfg, p = params["config"], params.get("members", 10)
        frac = params.get("sample_fraction", 1.0)
        return _Adapter(
            fit=lambda d: fit_bagging(cfg, d, p, frac, seed=seed),
            predict=lambda m, X: m.predict(X),
            predict_proba=lambda m, X: m.predict_proba(X),
            blob=modelio.serialize,
        )
    if spec.kind == "boosting":
        cfg, p = params["config"], params.get("rounds", 10)
        lr = params.get("learning_rate", 1.0)
        return _Adapter(
            fit=lambda d: fit_boosting(cfg, d, p, lr, seed=seed),
            predict=lambda m, X: m.predict(X),
            predict_proba=lambda m, X: m.predict_proba(X),
            blob=modelio.serialize,
        )
    if spec.kind == "stacking":
        configs = params["configs"]
        folds = params.get("folds", 5)
        return _Adapter(
            fit=lambda d: fit_stacking(configs, d, folds, seed=seed),
            predict=lambda m, X: m.predict(X),
            predict_proba=lambda m, X: m.predict_proba(X),
            blob=modelio.serialize,
        )
    raise InvalidSpec(f"unknown model kind {spec.kind!r}")


# --- the run loop ---------------------------------------------------------------

def _impute_with(reference: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, float]:
    """Fill NaNs in X using column means of the reference rows; returns time."""
    t0 = time.perf_counter()
    mask = np.isnan(X)
    if mask.any():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            means = np.nanmean(reference, axis=0)
        means = np.where(np.isnan(means), 0.0, means)
        X = np.where(mask, means[None, :], X)
    return X, time.perf_counter() - t0


def _fold_metrics(task: str, y_true, y_pred, probas, binary: bool) -> dict[str, float]:
    if task == REGRESSION:
        return {"mae": mae(y_true, y_pred), "r2": r2(y_true, y_pred)}
    out = {"accuracy": accuracy(y_true, y_pred), "logloss": logloss(y_true, probas)}
    if binary:
        out["auc"] = auc(y_true, probas[:, 1])
    return out


def _splits(d: Dataset, cv: dict, seed: int):
    kind, k = next(iter(cv.items()))
    if kind == "kfold":
        return kfold_split(d.n_samples, k, seed)
    return stratified_kfold_split(d.targets, k, seed)


def run_experiment(spec: ExperimentSpec) -> "BenchmarkReport":
    """Health checks, per-fold fit/predict with timings, aggregation, ranking."""
    started = time.time()
    tasks = set()
    datasets: list[tuple[str, Dataset]] = []
    dataset_entries = []
    caught: list[str] = []
    for src in spec.datasets:
        d = src.materialize()
        tasks.add(d.task)
        datasets.append((src.name, d))
        dataset_entries.append({
            "name": src.name,
            "task": d.task,
            "n_samples": d.n_samples,
            "n_features": d.n_features,
            "health": check_health(d).to_dict(),
        })
    if len(tasks) != 1:
        raise InvalidSpec("all datasets in a suite must share one task")
    task = tasks.pop()

    cells = []
    records = []
    for ds_name, d in datasets:
        with warnings.catch_warnings(record=True) as wrec:
            warnings.simplefilter("always")
            splits = _splits(d, spec.cv, spec.seed)
        caught.extend(f"{ds_name}: {w.message}" for w in wrec)
        binary = task == CLASSIFICATION and len(np.unique(d.targets)) == 2
        for mspec in spec.models:
            adapter = build_adapter(mspec, spec.seed)
            size_mb = len(adapter.blob(adapter.fit(d))) / (1024 * 1024)
            folds = []
            for fold_no, (train, test) in enumerate(splits):
                t0 = time.perf_counter()
                model = adapter.fit(d.take_rows(train))
                train_time = time.perf_counter() - t0
                test_X, prep_time = _impute_with(d.features[train], d.features[test])
                t0 = time.perf_counter()
                y_pred = adapter.predict(model, test_X)
                probas = None
                if task == CLASSIFICATION:
                    probas = adapter.predict_proba(model, test_X)
                predict_time = time.perf_counter() - t0
                entry = {
                    "fold": fold_no,
                    "train_time_s": train_time,
                    "predict_time_s": predict_time,
                    "preprocess_time_s": prep_time,
                    "model_fingerprint": hashlib.sha256(adapter.blob(model)).hexdigest(),
                }
                entry.update(_fold_metrics(task, d.targets[test], y_pred, probas, binary))
                folds.append(entry)
            metric_names = [k for k in folds[0] if k not in ("fold", "model_fingerprint")]
            aggregate = {k: float(np.mean([f[k] for f in folds])) for k in metric_names}
            aggregate["model_size_mb"] = size_mb
            aggregate["estimated_energy"] = estimated_energy(
                size_mb, aggregate["train_time_s"], aggregate["predict_time_s"]
            )
            cells.append({
                "model": mspec.name,
                "dataset": ds_name,
                "folds": folds,
                "aggregate": aggregate,
            })
            records.append(MetricRecord(mspec.name, ds_name, dict(aggregate)))

    accuracy_group = REGRESSION_ACCURACY_GROUP if task == REGRESSION else CLASSIFICATION_ACCURACY_GROUP
    if task == CLASSIFICATION and any("auc" not in r.metrics for r in records):
        accuracy_group = {k: v for k, v in accuracy_group.items() if k != "auc"}
    rank_tables = {
        "accuracy_group": rank_models(records, accuracy_group).to_dict(),
        "cost_group": rank_models(records, COST_GROUP).to_dict(),
    }

    report = BenchmarkReport(
        spec=_spec_echo(spec),
        datasets=dataset_entries,
        cells=cells,
        rank_tables=rank_tables,
        warnings=caught,
        determinism_hash="",
        wall_clock={"started_unix": started, "duration_s": time.time() - started},
    )
    report.determinism_hash = report.compute_determinism_hash()
    return report


def _spec_echo(spec: ExperimentSpec) -> dict:
    def describe_source(src: DatasetSource) -> dict:
        out = {"name": src.name}
        if src.generator is not None:
            gen = {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in src.generator.__dict__.items()}
            gen["kind"] = type(src.generator).__name__
            out["generator"] = gen
        elif src.csv_path is not None:
            out["csv"] = {"path": src.csv_path, "target": src.csv_target, "task": src.csv_task}
        else:
            out["inline"] = True
        return out

    def describe_model(m: ModelSpec) -> dict:
        params = {}
        for key, value in m.params.items():
            if isinstance(value, SpinexConfig):
                params[key] = modelio._config_to_dict(value)
            elif isinstance(value, (list, tuple)) and value and isinstance(value[0], SpinexConfig):
                params[key] = [modelio._config_to_dict(v) for v in value]
            else:
                params[key] = value
        return {"name": m.name, "kind": m.kind, "params": params}

    return {
        "suite": spec.suite,
        "seed": spec.seed,
        "cv": dict(spec.cv),
        "datasets": [describe_source(s) for s in spec.datasets],
        "models": [describe_model(m) for m in spec.models],
    }


@dataclass
class BenchmarkReport:
    spec: dict
    datasets: list[dict]
    cells: list[dict]
    rank_tables: dict[str, dict]
    warnings: list[str]
    determinism_hash: str
    wall_clock: dict

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "datasets": self.datasets,
            "cells": self.cells,
            "rank_tables": self.rank_tables,
            "warnings": self.warnings,
            "determinism_hash": self.determinism_hash,
            "wall_clock": self.wall_clock,
        }

    @staticmethod
    def from_dict(obj: dict) -> "BenchmarkReport":
        return BenchmarkReport(
            spec=obj["spec"],
            datasets=obj["datasets"],
            cells=obj["cells"],
            rank_tables=obj["rank_tables"],
            warnings=obj.get("warnings", []),
            determinism_hash=obj.get("determinism_hash", ""),
            wall_clock=obj.get("wall_clock", {}),
        )

    def compute_determinism_hash(self) -> str:
        """SHA-256 over the report with every timing-valued field removed."""
        doc = self.to_dict()
        doc.pop("wall_clock", None)
        doc.pop("determinism_hash", None)
        doc["rank_tables"] = {
            k: v for k, v in doc["rank_tables"].items() if k != "cost_group"
        }
        stripped = _strip_timing(doc)
        return hashlib.sha256(
            json.dumps(stripped, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in _TIMING_KEYS}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


# --- report emission --------------------------------------------------------------

_METRIC_ORDER = ["mae", "r2", "accuracy", "logloss", "auc", "train_time_s",
                 "predict_time_s", "preprocess_time_s", "model_size_mb", "estimated_energy"]


def _csv_rows(report: BenchmarkReport, per_fold: bool) -> list[list]:
    rows = []
    for cell in report.cells:
        for metric in _METRIC_ORDER:
            if metric in cell["aggregate"]:
                rows.append([cell["model"], cell["dataset"], "", metric, cell["aggregate"][metric]])
        if per_fold:
            for fold in cell["folds"]:
                for metric in _METRIC_ORDER:
                    if metric in fold:
                        rows.append([cell["model"], cell["dataset"], fold["fold"], metric, fold[metric]])
    return rows


def _markdown_rank_table(name: str, table: dict) -> str:
    metrics = table["metrics"]
    header = ["Model"] + [f"{m} (avg)" for m in metrics] + [f"{m} (rank)" for m in metrics]
    header += ["Rank sum", "Overall rank"]
    lines = [f"## {name.replace('_', ' ').title()}", "",
             "| " + " | ".join(header) + " |",
             "|" + "---|" * len(header)]
    order = sorted(table["models"], key=lambda m: (table["overall_rank"][m], m))
    for model in order:
        row = [model]
        row += [f"{table['averages'][m][model]:.6g}" for m in metrics]
        row += [str(table["ranks"][m][model]) for m in metrics]
        row += [str(table["rank_sum"][model]), str(table["overall_rank"][model])]
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    return "\n".join(lines)


def emit_report(report: BenchmarkReport, formats, out_dir: str, per_fold: bool = False) -> list[str]:
    """Write the report in the requested formats; returns created paths.

    json: full nested report. csv: flat (model, dataset, fold, metric,
    value) rows. md: rank tables. svg: matplotlib rank-sum bar charts.
    """
    import csv as _csv
    import os

    from .figures import render_rank_chart

    formats = set(formats)
    unknown = formats - {"json", "csv", "md", "svg"}
    if unknown:
        raise InvalidSpec(f"unknown report formats: {sorted(unknown)}")
    paths = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        if "json" in formats:
            path = os.path.join(out_dir, "report.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            paths.append(path)
        if "csv" in formats:
            path = os.path.join(out_dir, "report.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = _csv.writer(fh)
                writer.writerow(["model", "dataset", "fold", "metric", "value"])
                writer.writerows(_csv_rows(report, per_fold))
            paths.append(path)
        if "md" in formats:
            path = os.path.join(out_dir, "report.md")
            sections = [f"# Benchmark report: {report.spec['suite']}", ""]
            sections += [_markdown_rank_table(name, table)
                         for name, table in report.rank_tables.items()]
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("\n".join(sections))
            paths.append(path)
        if "svg" in formats:
            for name, table in report.rank_tables.items():
                paths.append(render_rank_chart(table, name, out_dir))
    except OSError as exc:
        raise IoError(f"cannot write report to {out_dir}: {exc}") from exc
    return paths


# --- built-in suites -----------------------------------------------------------------

def _regression_zoo() -> list[ModelSpec]:
    return [
        ModelSpec("SPINEX", "spinex", {"config": regressor_defaults()}),
        ModelSpec("KNeighborsRegressor", "baseline_knn", {"k": 5, "metric": MANHATTAN}),
    ]


def _classification_zoo() -> list[ModelSpec]:
    return [
        ModelSpec("SPINEXClassifier(default)", "spinex", {"config": classifier_defaults()}),
        ModelSpec("SPINEX", "spinex", {"config": classifier_tuned()}),
        ModelSpec("KNeighborsClassifier", "baseline_knn", {"k": 5, "metric": EUCLIDEAN}),
    ]


def builtin_suite(name: str, seed: int) -> ExperimentSpec:
    """The shipped suites over the published synthetic parameter grids."""
    if name == "synthetic-regression":
        sources = [DatasetSource(n, generator=g) for n, g in table3_specs(base_seed=seed)]
        return ExperimentSpec(suite=name, datasets=sources, models=_regression_zoo(),
                              cv={"kfold": 5}, seed=seed)
    if name == "synthetic-classification-a":
        sources = [DatasetSource(n, generator=g) for n, g in table5a_specs(base_seed=seed)]
        return ExperimentSpec(suite=name, datasets=sources, models=_classification_zoo(),
                              cv={"stratified_kfold": 10}, seed=seed)
    if name == "synthetic-classification-b":
        sources = [DatasetSource(n, generator=g) for n, g in table5b_specs(base_seed=seed)]
        return ExperimentSpec(suite=name, datasets=sources, models=_classification_zoo(),
                              cv={"stratified_kfold": 10}, seed=seed)
    raise InvalidSpec(f"unknown suite {name!r}; choose from {BUILTIN_SUITES}")


# --- manifest parsing ------------------------------------------------------------------

def _gen_spec_from_dict(obj: dict) -> RegressionGenSpec | ClassificationGenSpec:
    obj = dict(obj)
    family = obj.pop("family", None)
    if family is None:
        raise InvalidSpec("generator entries need a 'family' key")
    if family == "classification":
        if "weights" in obj:
            obj["weights"] = tuple(obj["weights"])
        return ClassificationGenSpec(**obj)
    return RegressionGenSpec(family=family, **obj)


def _model_spec_from_dict(obj: dict) -> ModelSpec:
    obj = dict(obj)
    name = obj.pop("name", None)
    kind = obj.pop("kind", None)
    if not name or not kind:
        raise InvalidSpec("model entries need 'name' and 'kind'")
    if "config" in obj:
        obj["config"] = modelio.config_from_dict(obj["config"])
    if "configs" in obj:
        obj["configs"] = [modelio.config_from_dict(c) for c in obj["configs"]]
    return ModelSpec(name=name, kind=kind, params=obj)


def spec_from_manifest(obj: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from a parsed manifest JSON document."""
    try:
        sources = []
        for entry in obj["datasets"]:
            name = entry["name"]
            if "generator" in entry:
                sources.append(DatasetSource(name, generator=_gen_spec_from_dict(entry["generator"])))
            else:
                sources.append(DatasetSource(
                    name, csv_path=entry["csv"], csv_target=entry["target"],
                    csv_task=entry.get("task", REGRESSION),
                ))
        models = [_model_spec_from_dict(m) for m in obj["models"]]
        cv = {k: int(v) for k, v in obj["cv"].items()}
        return ExperimentSpec(
            suite=obj.get("suite", "custom"),
            datasets=sources,
            models=models,
            cv=cv,
            seed=int(obj.get("seed", 0)),
            out_dir=obj.get("out_dir"),
        )
    except KeyError as exc:
        raise InvalidSpec(f"manifest missing required key: {exc}") from exc
