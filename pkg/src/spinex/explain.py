"""Neighbor-based explainability.

Every quantity here is defined through plain predict calls on perturbed
copies of a query row: a feature's contribution is the change in the
predicted value (or in the probability of the originally predicted class)
when that feature is overwritten by its exclusion value. Nothing below
reaches into model internals beyond the stored exclusion statistics, so
each number can be reproduced with two or more independent predictions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import similarity
from .data import REGRESSION
from .errors import (
    CombinationBudgetExceeded,
    EmptyQuerySet,
    EmptyRange,
    IndexOutOfRange,
    InvalidFeatureIndex,
)
from .predictor import (
    EXCLUDE_MEAN,
    EXCLUDE_ZERO,
    SpinexModel,
    neighbor_sets,
    predict_class,
    predict_proba,
    predict_regression,
)

COMBINATION_BUDGET = 10_000


@dataclass(frozen=True)
class ContributionVector:
    values: np.ndarray  # length = original feature count
    instance_index: int


@dataclass(frozen=True)
class InteractionMatrix:
    values: np.ndarray  # (d, d), symmetric, zero diagonal
    instance_index: int


@dataclass(frozen=True)
class CombinationImpact:
    """(feature index set, mean impact) pairs sorted by descending |impact|."""

    entries: list[tuple[tuple[int, ...], float]]


@dataclass(frozen=True)
class LocalExplanation:
    instance_index: int
    contributions: ContributionVector
    interactions: InteractionMatrix
    neighbor_indices: np.ndarray
    neighbor_weights: np.ndarray
    prediction: float | int


def _check_feature_indices(m: SpinexModel, features) -> list[int]:
    out = []
    for f in features:
        f = int(f)
        if f < 0 or f >= m.n_original_features:
            raise InvalidFeatureIndex(f"feature index {f} out of range 0..{m.n_original_features - 1}")
        out.append(f)
    return out


def exclude(x: np.ndarray, features, method: str, model: SpinexModel) -> np.ndarray:
    """Copy of a full-width row with the listed features overwritten.

    ``zero`` writes 0.0, ``mean`` writes the training mean of each column.
    """
    idx = _check_feature_indices(model, features)
    out = np.array(x, dtype=float, copy=True)
    if method == EXCLUDE_ZERO:
        out[idx] = 0.0
    elif method == EXCLUDE_MEAN:
        out[idx] = model.feature_means[idx]
    else:
        raise ValueError(f"unknown exclude method {method!r}")
    return out


def _exclude_matrix(m: SpinexModel, X: np.ndarray, features: list[int]) -> np.ndarray:
    out = np.array(X, dtype=float, copy=True)
    if m.config.exclude_method == EXCLUDE_ZERO:
        out[:, features] = 0.0
    else:
        out[:, features] = m.feature_means[features][None, :]
    return out


def _base_quantity(m: SpinexModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Predicted value (regression) or probability of the predicted class.

    For classification the class is fixed from the unmodified rows so that
    exclusion probes measure movement of one probability, not a class flip.
    """
    if m.task == REGRESSION:
        return predict_regression(m, X), None
    fixed = predict_class(m, X)
    probs = predict_proba(m, X)
    return probs[np.arange(len(fixed)), fixed], fixed


def _quantity_excluding(m: SpinexModel, X: np.ndarray, features: list[int],
                        fixed_classes: np.ndarray | None) -> np.ndarray:
    Xe = _exclude_matrix(m, X, features)
    if m.task == REGRESSION:
        return predict_regression(m, Xe)
    probs = predict_proba(m, Xe)
    return probs[np.arange(len(fixed_classes)), fixed_classes]


def feature_contributions(m: SpinexModel, X: np.ndarray) -> list[ContributionVector]:
    """Per-row contribution of each original feature.

    C_k = base quantity - the same quantity with feature k excluded.
    Columns dropped by feature selection contribute exactly 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    base, fixed = _base_quantity(m, X)
    d = m.n_original_features
    C = np.zeros((X.shape[0], d))
    for k in range(d):
        C[:, k] = base - _quantity_excluding(m, X, [k], fixed)
    return [ContributionVector(values=C[i], instance_index=i) for i in range(X.shape[0])]


def interaction_effects(m: SpinexModel, X: np.ndarray) -> list[InteractionMatrix]:
    """Per-row pairwise interaction I_kl = C_k + C_l - C_kl, zero diagonal."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    base, fixed = _base_quantity(m, X)
    d = m.n_original_features
    C = np.zeros((X.shape[0], d))
    for k in range(d):
        C[:, k] = base - _quantity_excluding(m, X, [k], fixed)
    I = np.zeros((X.shape[0], d, d))
    for k, l in itertools.combinations(range(d), 2):
        c_kl = base - _quantity_excluding(m, X, [k, l], fixed)
        val = C[:, k] + C[:, l] - c_kl
        I[:, k, l] = val
        I[:, l, k] = val
    return [InteractionMatrix(values=I[i], instance_index=i) for i in range(X.shape[0])]


def global_feature_importance(m: SpinexModel, X: np.ndarray) -> np.ndarray:
    """Mean absolute contribution of each feature across the query rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise EmptyQuerySet("importance needs at least one query row")
    contribs = feature_contributions(m, X)
    stacked = np.stack([c.values for c in contribs])
    return np.abs(stacked).mean(axis=0)


def average_interactions(mats: list[InteractionMatrix], absolute: bool = False) -> np.ndarray:
    """Signed (default) or absolute mean of per-instance interaction matrices."""
    stacked = np.stack([m.values for m in mats])
    if absolute:
        stacked = np.abs(stacked)
    return stacked.mean(axis=0)


def combination_impact(m: SpinexModel, X: np.ndarray, max_size: int) -> CombinationImpact:
    """Mean prediction change when whole feature subsets are excluded at once.

    Enumerates every non-empty subset of size <= max_size (guarded by a
    hard budget) and sorts by descending |impact|, ties lexicographic.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = m.n_original_features
    if not 1 <= max_size <= d:
        raise ValueError(f"max_size must be in 1..{d}, got {max_size}")
    total = sum(math.comb(d, s) for s in range(1, max_size + 1))
    if total > COMBINATION_BUDGET:
        raise CombinationBudgetExceeded(
            f"{total} subsets exceed the budget of {COMBINATION_BUDGET}"
        )
    base, fixed = _base_quantity(m, X)
    entries = []
    for size in range(1, max_size + 1):
        for subset in itertools.combinations(range(d), size):
            delta = base - _quantity_excluding(m, X, list(subset), fixed)
            entries.append((subset, float(delta.mean())))
    entries.sort(key=lambda e: (-abs(e[1]), e[0]))
    return CombinationImpact(entries=entries)


def _check_instance(X: np.ndarray, instance: int) -> int:
    if not 0 <= instance < X.shape[0]:
        raise IndexOutOfRange(f"instance {instance} out of range 0..{X.shape[0] - 1}")
    return int(instance)


def local_explanation(m: SpinexModel, X: np.ndarray, instance: int) -> LocalExplanation:
    """Contributions, interactions, neighbors, and the prediction for one row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    instance = _check_instance(X, instance)
    row = X[instance : instance + 1]
    contrib = feature_contributions(m, row)[0]
    inter = interaction_effects(m, row)[0]
    ns = neighbor_sets(m, row)[0]
    pred = m.predict(row)[0]
    return LocalExplanation(
        instance_index=instance,
        contributions=ContributionVector(values=contrib.values, instance_index=instance),
        interactions=InteractionMatrix(values=inter.values, instance_index=instance),
        neighbor_indices=ns.indices,
        neighbor_weights=ns.weights,
        prediction=pred,
    )


def prediction_change_trace(m: SpinexModel, X: np.ndarray, instance: int) -> np.ndarray:
    """Prediction after each neighbor joins, weights recomputed per prefix.

    Element t uses only the t+1 nearest neighbors; the last element equals
    the full prediction.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    instance = _check_instance(X, instance)
    row = X[instance : instance + 1]
    ns = neighbor_sets(m, row)[0]
    cfg = m.config
    k = len(ns.indices)
    out = np.empty(k, dtype=float if m.task == REGRESSION else int)
    for t in range(1, k + 1):
        dst = ns.distances[:t][None, :]
        w = similarity.weight_rows(
            dst,
            cfg.weighting,
            kernel_width=cfg.kernel_width,
            distance_threshold=cfg.distance_threshold,
            decay=cfg.distance_threshold_decay,
        )[0]
        targets = m.train_targets[ns.indices[:t]]
        if m.task == REGRESSION:
            sw = w.sum()
            out[t - 1] = (w @ targets) / sw if sw > 0 else targets.mean()
        else:
            sums = np.bincount(targets, weights=w, minlength=len(m.class_labels))
            out[t - 1] = m.class_labels[int(np.argmax(sums))]
    return out


def local_changes_grid(m: SpinexModel, X: np.ndarray, instance: int, features,
                       grid_size: int, ranges=None) -> np.ndarray:
    """Predictions over a Cartesian grid of 1-3 overwritten features.

    Default per-feature range is [training min, training max]; the output
    has shape (grid_size,) * len(features).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    instance = _check_instance(X, instance)
    features = _check_feature_indices(m, features)
    if not 1 <= len(features) <= 3:
        raise ValueError("features must list 1 to 3 column indices")
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    if ranges is None:
        ranges = [None] * len(features)
    if len(ranges) != len(features):
        raise ValueError("one range (or None) required per feature")
    axes = []
    for f, rng in zip(features, ranges):
        lo, hi = rng if rng is not None else (m.feature_mins[f], m.feature_maxs[f])
        if lo > hi:
            raise EmptyRange(f"range ({lo}, {hi}) for feature {f} is empty")
        axes.append(np.linspace(lo, hi, grid_size))
    mesh = np.meshgrid(*axes, indexing="ij")
    n_points = mesh[0].size
    rows = np.tile(X[instance], (n_points, 1))
    for f, axis_vals in zip(features, mesh):
        rows[:, f] = axis_vals.ravel()
    preds = m.predict(rows)
    return preds.reshape(mesh[0].shape)


def neighbor_counts(m: SpinexModel, X: np.ndarray) -> np.ndarray:
    """How often each training row appears in the queries' neighbor sets."""
    sets = neighbor_sets(m, X)
    counts = np.zeros(m.n_train, dtype=int)
    for ns in sets:
        counts += np.bincount(ns.indices, minlength=m.n_train)
    return counts


@dataclass(frozen=True)
class ExplanationReport:
    """Everything the explain CLI emits for one (model, data) pair."""

    feature_names: list[str]
    contributions: np.ndarray          # (n, d) signed per-instance
    importances: np.ndarray            # (d,) mean |contribution|
    mean_interactions: np.ndarray      # (d, d) signed mean
    abs_mean_interactions: np.ndarray  # (d, d) mean of |interaction|
    combination_impacts: CombinationImpact | None
    local: LocalExplanation | None
    prediction_trace: np.ndarray | None
    neighbor_counts: np.ndarray

    def to_dict(self) -> dict:
        out = {
            "feature_names": list(self.feature_names),
            "contributions": self.contributions.tolist(),
            "importances": self.importances.tolist(),
            "mean_interactions": self.mean_interactions.tolist(),
            "abs_mean_interactions": self.abs_mean_interactions.tolist(),
            "neighbor_counts": self.neighbor_counts.tolist(),
        }
        if self.combination_impacts is not None:
            out["combination_impacts"] = [
                {"features": list(f), "impact": v} for f, v in self.combination_impacts.entries
            ]
        if self.local is not None:
            out["local"] = {
                "instance": self.local.instance_index,
                "contributions": self.local.contributions.values.tolist(),
                "interactions": self.local.interactions.values.tolist(),
                "neighbor_indices": self.local.neighbor_indices.tolist(),
                "neighbor_weights": self.local.neighbor_weights.tolist(),
                "prediction": float(self.local.prediction),
            }
        if self.prediction_trace is not None:
            out["prediction_trace"] = self.prediction_trace.tolist()
        return out


def build_report(m: SpinexModel, X: np.ndarray, instance: int | None = None,
                 max_combination_size: int | None = None) -> ExplanationReport:
    """Assemble the full explanation bundle used by the CLI."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise EmptyQuerySet("explanation needs at least one query row")
    contribs = feature_contributions(m, X)
    stacked = np.stack([c.values for c in contribs])
    inters = interaction_effects(m, X)
    combos = None
    if max_combination_size is not None:
        combos = combination_impact(m, X, max_combination_size)
    local = trace = None
    if instance is not None:
        local = local_explanation(m, X, instance)
        trace = prediction_change_trace(m, X, instance)
    return ExplanationReport(
        feature_names=list(m.feature_names),
        contributions=stacked,
        importances=np.abs(stacked).mean(axis=0),
        mean_interactions=average_interactions(inters),
        abs_mean_interactions=average_interactions(inters, absolute=True),
        combination_impacts=combos,
        local=local,
        prediction_trace=trace,
        neighbor_counts=neighbor_counts(m, X),
    )
