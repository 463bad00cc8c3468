"""Dataset container, CSV ingestion, missing-data and outlier handling,
and sample-size health checks.

All operations are pure: they return new ``Dataset`` objects and never
mutate their inputs, so they are safe to call concurrently.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    AllMissingColumn,
    AllRowsRemoved,
    EmptyFile,
    MissingTargetColumn,
    UnparseableCell,
)

REGRESSION = "regression"
CLASSIFICATION = "classification"

MISSING_MARKERS = {"", "nan", "na", "null"}

MEAN_IMPUTATION = "mean_imputation"
DELETION = "deletion"
Z_SCORE = "z_score_outlier_handling"
IQR = "iqr_outlier_handling"
NO_OUTLIER_HANDLING = "none"

Z_SCORE_CUTOFF = 3.0
IQR_FACTOR = 1.5


@dataclass(frozen=True)
class Dataset:
    """A feature matrix with aligned targets.

    Classification targets must be a contiguous 0-based label set; the
    constructor validates alignment and label contiguity.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: list[str]
    task: str

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == CLASSIFICATION:
            targ = np.asarray(self.targets)
            if targ.size and not np.all(np.equal(np.mod(targ, 1), 0)):
                raise ValueError("classification targets must be integers")
            targ = targ.astype(int)
            if targ.size and targ.min() < 0:
                raise ValueError("classification targets must be non-negative")
            object.__setattr__(self, "targets", targ)
        else:
            object.__setattr__(self, "targets", np.asarray(self.targets, dtype=float))
        if len(self.targets) != feats.shape[0]:
            raise ValueError("targets length must equal feature row count")
        if len(self.feature_names) != feats.shape[1]:
            raise ValueError("feature_names length must equal feature column count")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take_rows(self, idx: np.ndarray) -> "Dataset":
        return replace(self, features=self.features[idx], targets=self.targets[idx])


@dataclass(frozen=True)
class HealthReport:
    """Observations-per-feature ratios against the three published minimums."""

    obs_per_feature: float
    cases_per_feature: float
    obs_feature_ratio: float
    rule_10_pass: bool
    rule_23_pass: bool
    rule_ratio_pass: bool

    def to_dict(self) -> dict:
        return {
            "obs_per_feature": self.obs_per_feature,
            "cases_per_feature": self.cases_per_feature,
            "obs_feature_ratio": self.obs_feature_ratio,
            "rule_10_pass": self.rule_10_pass,
            "rule_23_pass": self.rule_23_pass,
            "rule_ratio_pass": self.rule_ratio_pass,
        }


@dataclass(frozen=True)
class PreprocessConfig:
    missing_data_method: str = MEAN_IMPUTATION
    outlier_handling_method: str = Z_SCORE

    def __post_init__(self):
        if self.missing_data_method not in (MEAN_IMPUTATION, DELETION):
            raise ValueError(f"unknown missing-data method {self.missing_data_method!r}")
        if self.outlier_handling_method not in (Z_SCORE, IQR, NO_OUTLIER_HANDLING):
            raise ValueError(f"unknown outlier method {self.outlier_handling_method!r}")


def _parse_cell(text: str, row: int, col: str) -> float:
    stripped = text.strip()
    if stripped.lower() in MISSING_MARKERS:
        return math.nan
    try:
        return float(stripped)
    except ValueError:
        raise UnparseableCell(row, col, text) from None


def load_csv(path: str, target_column: str, task: str) -> Dataset:
    """Load a comma-separated file with one header row into a ``Dataset``.

    Empty cells and "NaN" markers in feature columns become NaN for
    downstream imputation. Lines starting with ``#`` are skipped, so the
    provenance comment written by the generator export round-trips.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise EmptyFile(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    if target_column not in header:
        raise MissingTargetColumn(target_column)
    body = rows[1:]
    if not body:
        raise EmptyFile(f"{path}: no data rows")

    target_idx = header.index(target_column)
    feature_names = [h for i, h in enumerate(header) if i != target_idx]
    features = np.empty((len(body), len(feature_names)))
    targets = np.empty(len(body))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise UnparseableCell(i, "<row>", ",".join(row))
        j = 0
        for k, cell in enumerate(row):
            if k == target_idx:
                value = _parse_cell(cell, i, target_column)
                if math.isnan(value):
                    raise UnparseableCell(i, target_column, cell)
                targets[i] = value
            else:
                features[i, j] = _parse_cell(cell, i, header[k])
                j += 1
    if task == CLASSIFICATION:
        if not np.all(np.equal(np.mod(targets, 1), 0)):
            raise UnparseableCell(
                int(np.flatnonzero(np.mod(targets, 1) != 0)[0]), target_column, "non-integer label"
            )
        targets = targets.astype(int)
        # ingestion enforces the contiguous 0-based label convention; row
        # subsets taken later (CV folds, bootstrap samples) may miss labels
        labels = np.unique(targets)
        if labels[0] < 0 or not np.array_equal(labels, np.arange(len(labels))):
            raise UnparseableCell(0, target_column, "labels must form a contiguous 0-based set")
    return Dataset(features, targets, feature_names, task)


def load_matrix_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Read a header + numeric matrix (no target handling); NaN markers pass through."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise EmptyFile(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptyFile(f"{path}: no data rows")
    matrix = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise UnparseableCell(i, "<row>", ",".join(row))
        for j, cell in enumerate(row):
            matrix[i, j] = _parse_cell(cell, i, header[j])
    return header, matrix


def save_csv(d: Dataset, path: str, target_column: str = "target", comment: str | None = None):
    """Write a dataset in the same delimited format ``load_csv`` reads."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(list(d.feature_names) + [target_column])
        for x, y in zip(d.features, d.targets):
            cells = ["" if math.isnan(v) else repr(float(v)) for v in x]
            if d.task == CLASSIFICATION:
                cells.append(str(int(y)))
            else:
                cells.append(repr(float(y)))
            writer.writerow(cells)


def impute_missing(d: Dataset, method: str = MEAN_IMPUTATION) -> Dataset:
    """Fill NaNs with column means, or drop rows containing any NaN."""
    feats = d.features
    mask = np.isnan(feats)
    if not mask.any():
        return d
    if method == MEAN_IMPUTATION:
        all_missing = mask.all(axis=0)
        if all_missing.any():
            raise AllMissingColumn(d.feature_names[int(np.flatnonzero(all_missing)[0])])
        means = np.nanmean(feats, axis=0)
        filled = np.where(mask, means[None, :], feats)
        return replace(d, features=filled)
    if method == DELETION:
        keep = ~mask.any(axis=1)
        return d.take_rows(np.flatnonzero(keep))
    raise ValueError(f"unknown missing-data method {method!r}")


def handle_outliers(d: Dataset, method: str = Z_SCORE) -> Dataset:
    """Remove rows whose features look extreme; targets are never inspected.

    ``z_score_outlier_handling`` flags |value - mean| / std > 3 (population
    std; constant columns never flag). ``iqr_outlier_handling`` flags values
    outside [Q1 - 1.5*IQR, Q3 + 1.5*IQR] with linearly interpolated
    quartiles.
    """
    if method == NO_OUTLIER_HANDLING:
        return d
    feats = d.features
    if feats.shape[0] < 2:
        raise ValueError("outlier handling needs at least 2 rows")
    if np.isnan(feats).any():
        raise ValueError("outlier handling requires imputed (NaN-free) features")
    if method == Z_SCORE:
        means = feats.mean(axis=0)
        stds = feats.std(axis=0)
        safe = np.where(stds == 0, 1.0, stds)
        z = np.abs(feats - means[None, :]) / safe[None, :]
        z[:, stds == 0] = 0.0
        flagged = (z > Z_SCORE_CUTOFF).any(axis=1)
    elif method == IQR:
        q1 = np.quantile(feats, 0.25, axis=0)
        q3 = np.quantile(feats, 0.75, axis=0)
        iqr = q3 - q1
        lo = q1 - IQR_FACTOR * iqr
        hi = q3 + IQR_FACTOR * iqr
        flagged = ((feats < lo[None, :]) | (feats > hi[None, :])).any(axis=1)
    else:
        raise ValueError(f"unknown outlier method {method!r}")
    if flagged.all():
        raise AllRowsRemoved("outlier filtering would remove every row")
    return d.take_rows(np.flatnonzero(~flagged))


def preprocess(d: Dataset, config: PreprocessConfig) -> Dataset:
    """Imputation then outlier handling, the pipeline order used by fit."""
    out = impute_missing(d, config.missing_data_method)
    if out.n_samples >= 2:
        out = handle_outliers(out, config.outlier_handling_method)
    return out


def check_health(d: Dataset) -> HealthReport:
    """Observations-per-feature ratio against the 10x, 23x and 5x minimums."""
    if d.n_features < 1:
        raise ValueError("health check needs at least one feature")
    ratio = d.n_samples / d.n_features
    return HealthReport(
        obs_per_feature=ratio,
        cases_per_feature=ratio,
        obs_feature_ratio=ratio,
        rule_10_pass=ratio >= 10,
        rule_23_pass=ratio >= 23,
        rule_ratio_pass=ratio >= 5,
    )
