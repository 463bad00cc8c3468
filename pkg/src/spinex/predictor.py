"""The SPINEX model: configuration, fitting, prediction, and scoring.

A fitted model is a frozen snapshot of (preprocessed, column-selected)
training data plus the resolved configuration: a lazy learner. Queries are
always passed full-width in the original feature space and are mapped
through the stored column selection internally, so explanation code can
perturb any original feature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from . import similarity
from .cv import kfold_split
from .data import (
    CLASSIFICATION,
    MEAN_IMPUTATION,
    NO_OUTLIER_HANDLING,
    REGRESSION,
    Dataset,
    PreprocessConfig,
    preprocess,
)
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    SpinexError,
    TooManyPrioritizedFeatures,
    UnfittedModel,
)

EXCLUDE_ZERO = "zero"
EXCLUDE_MEAN = "mean"

ENSEMBLE_NONE = "none"
ENSEMBLE_METHODS = (ENSEMBLE_NONE, "bagging", "boosting", "stacking")

# internal seed for the feature-selection CV; the config carries no RNG
# state, so fitting stays a pure function of (config, data)
_SELECTION_SEED = 0
_SELECTION_FOLDS = 3


@dataclass(frozen=True)
class SpinexConfig:
    """Hyperparameters of a single SPINEX model.

    ``metric`` and ``distance_threshold_decay`` default per task (manhattan
    and 0.05 for regression, euclidean and 0.95 for classification) and are
    filled in when the config is resolved at fit time.
    """

    n_neighbors: int = 5
    metric: str | None = None
    weighting: str = similarity.GAUSSIAN
    kernel_width: float = 1.0
    distance_threshold: float = 0.05
    distance_threshold_decay: float | None = None
    ensemble_method: str = ENSEMBLE_NONE
    n_features_to_select: int | None = None
    auto_select_features: bool = False
    use_local_search: bool = False
    prioritized_features: tuple[int, ...] | None = None
    exclude_method: str = EXCLUDE_ZERO
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if self.metric not in (None, similarity.MANHATTAN, similarity.EUCLIDEAN):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.weighting not in (similarity.GAUSSIAN, similarity.RECIPROCAL, similarity.UNIFORM):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.kernel_width <= 0:
            raise ValueError("kernel_width must be > 0")
        if self.distance_threshold < 0:
            raise ValueError("distance_threshold must be >= 0")
        if self.distance_threshold_decay is not None and not (0 < self.distance_threshold_decay <= 1):
            raise ValueError("distance_threshold_decay must be in (0, 1]")
        if self.ensemble_method not in ENSEMBLE_METHODS:
            raise ValueError(f"unknown ensemble method {self.ensemble_method!r}")
        if self.exclude_method not in (EXCLUDE_ZERO, EXCLUDE_MEAN):
            raise ValueError(f"unknown exclude method {self.exclude_method!r}")
        if self.prioritized_features is not None:
            object.__setattr__(self, "prioritized_features", tuple(self.prioritized_features))

    def resolved_for(self, task: str) -> "SpinexConfig":
        """Fill task-dependent defaults so the fitted model is self-contained."""
        metric = self.metric
        decay = self.distance_threshold_decay
        if metric is None:
            metric = similarity.MANHATTAN if task == REGRESSION else similarity.EUCLIDEAN
        if decay is None:
            decay = 0.05 if task == REGRESSION else 0.95
        return replace(self, metric=metric, distance_threshold_decay=decay)


def regressor_defaults() -> SpinexConfig:
    """The published default regressor settings."""
    return SpinexConfig().resolved_for(REGRESSION)


def classifier_defaults() -> SpinexConfig:
    """The published default classifier settings (euclidean, decay 0.95)."""
    return SpinexConfig().resolved_for(CLASSIFICATION)


def classifier_tuned() -> SpinexConfig:
    """The tuned classifier variant reported alongside the default (k=20, manhattan)."""
    return SpinexConfig(n_neighbors=20, metric=similarity.MANHATTAN).resolved_for(CLASSIFICATION)


@dataclass(frozen=True)
class SpinexModel:
    """Fitted state; arrays are marked read-only after fit."""

    config: SpinexConfig
    task: str
    feature_names: list[str]
    selected_features: np.ndarray
    train_features: np.ndarray
    train_targets: np.ndarray
    class_labels: np.ndarray | None
    feature_means: np.ndarray
    feature_mins: np.ndarray
    feature_maxs: np.ndarray

    @property
    def n_train(self) -> int:
        return self.train_features.shape[0]

    @property
    def n_original_features(self) -> int:
        return len(self.feature_names)

    @property
    def effective_neighbors(self) -> int:
        return min(self.config.n_neighbors, self.n_train)

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == REGRESSION:
            return predict_regression(self, X)
        return predict_class(self, X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return predict_proba(self, X)

    def score(self, X: np.ndarray, y: np.ndarray) -> float:
        return score(self, X, y)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def fit(config: SpinexConfig, d: Dataset) -> SpinexModel:
    """Preprocess, optionally select features, and retain the training data."""
    if d.n_samples == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    config = config.resolved_for(d.task)
    clean = preprocess(d, config.preprocess)
    if clean.n_samples == 0:
        raise EmptyDataset("preprocessing removed every row")
    if config.auto_select_features:
        selected = np.asarray(select_features(config, clean), dtype=int)
    else:
        selected = np.arange(clean.n_features)
    feats = clean.features
    labels = np.unique(clean.targets) if d.task == CLASSIFICATION else None
    return SpinexModel(
        config=config,
        task=d.task,
        feature_names=list(d.feature_names),
        selected_features=_freeze(selected),
        train_features=_freeze(feats[:, selected]),
        train_targets=_freeze(clean.targets),
        class_labels=_freeze(labels) if labels is not None else None,
        feature_means=_freeze(feats.mean(axis=0)),
        feature_mins=_freeze(feats.min(axis=0)),
        feature_maxs=_freeze(feats.max(axis=0)),
    )


def _check_fitted(m: SpinexModel):
    if m.n_train == 0:
        raise UnfittedModel("model holds no training rows")


def query_matrix(m: SpinexModel, X: np.ndarray) -> np.ndarray:
    """Validate a full-width query matrix and map it through the column selection."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != m.n_original_features:
        raise DimensionMismatch(
            f"queries have {X.shape[1]} columns, model expects {m.n_original_features}"
        )
    if np.isnan(X).any():
        raise ValueError("queries must not contain NaN; impute before predicting")
    return X[:, m.selected_features]


def _neighbor_blocks(m: SpinexModel, Q: np.ndarray) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (indices, distances, weights) blocks for already-selected queries."""
    cfg = m.config
    k = m.effective_neighbors
    block = max(1, similarity._BLOCK_CELLS // max(1, m.n_train))
    for s in range(0, Q.shape[0], block):
        D = similarity._distance_block(Q[s : s + block], m.train_features, cfg.metric)
        idx, dst = similarity.top_k_indices(D, k)
        w = similarity.weight_rows(
            dst,
            cfg.weighting,
            kernel_width=cfg.kernel_width,
            distance_threshold=cfg.distance_threshold,
            decay=cfg.distance_threshold_decay,
        )
        yield idx, dst, w


def neighbor_sets(m: SpinexModel, X: np.ndarray) -> list[similarity.NeighborSet]:
    """Per-query NeighborSet under the model's configured kernel."""
    _check_fitted(m)
    Q = query_matrix(m, X)
    out = []
    for idx, dst, w in _neighbor_blocks(m, Q):
        out.extend(
            similarity.NeighborSet(indices=i, distances=d, weights=ww)
            for i, d, ww in zip(idx, dst, w)
        )
    return out


def predict_regression(m: SpinexModel, X: np.ndarray) -> np.ndarray:
    """Weighted neighbor-target mean; unweighted mean if the weights underflow."""
    _check_fitted(m)
    if m.task != REGRESSION:
        raise ValueError("predict_regression requires a regression model")
    Q = query_matrix(m, X)
    out = np.empty(Q.shape[0])
    pos = 0
    for idx, _dst, w in _neighbor_blocks(m, Q):
        targets = m.train_targets[idx]
        sw = w.sum(axis=1)
        safe = np.where(sw == 0, 1.0, sw)
        yhat = (w * targets).sum(axis=1) / safe
        dead = sw == 0
        if dead.any():
            yhat[dead] = targets[dead].mean(axis=1)
        out[pos : pos + len(yhat)] = yhat
        pos += len(yhat)
    return out


def _class_weight_sums(m: SpinexModel, Q: np.ndarray) -> np.ndarray:
    """Per-query weight mass per class; columns follow sorted class_labels."""
    K = len(m.class_labels)
    scores = np.zeros((Q.shape[0], K))
    pos = 0
    for idx, _dst, w in _neighbor_blocks(m, Q):
        encoded = np.searchsorted(m.class_labels, m.train_targets[idx])
        rows = np.arange(pos, pos + idx.shape[0])[:, None]
        np.add.at(scores, (rows, encoded), w)
        pos += idx.shape[0]
    return scores


def predict_class(m: SpinexModel, X: np.ndarray) -> np.ndarray:
    """Label with the largest neighbor weight sum; ties go to the smaller label."""
    _check_fitted(m)
    if m.task != CLASSIFICATION:
        raise ValueError("predict_class requires a classification model")
    Q = query_matrix(m, X)
    scores = _class_weight_sums(m, Q)
    return m.class_labels[np.argmax(scores, axis=1)]


def predict_proba(m: SpinexModel, X: np.ndarray) -> np.ndarray:
    """Per-class share of the neighbor weight mass; uniform if it underflows."""
    _check_fitted(m)
    if m.task != CLASSIFICATION:
        raise ValueError("predict_proba requires a classification model")
    Q = query_matrix(m, X)
    scores = _class_weight_sums(m, Q)
    totals = scores.sum(axis=1, keepdims=True)
    dead = totals[:, 0] == 0
    probs = scores / np.where(totals == 0, 1.0, totals)
    if dead.any():
        probs[dead] = 1.0 / scores.shape[1]
    return probs


def score(m: SpinexModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean accuracy for classifiers, coefficient of determination for regressors."""
    from .evalrank import accuracy, r2

    y = np.asarray(y)
    preds = m.predict(X)
    if len(y) != len(preds):
        raise DimensionMismatch("targets length does not match query count")
    if m.task == CLASSIFICATION:
        return accuracy(y, preds)
    return r2(y, preds)


# --- feature selection -------------------------------------------------------

def _selection_scoring_config(task: str) -> SpinexConfig:
    return SpinexConfig(
        preprocess=PreprocessConfig(
            missing_data_method=MEAN_IMPUTATION,
            outlier_handling_method=NO_OUTLIER_HANDLING,
        )
    ).resolved_for(task)


def _subset_dataset(d: Dataset, subset: tuple[int, ...]) -> Dataset:
    return Dataset(
        features=d.features[:, list(subset)],
        targets=d.targets,
        feature_names=[d.feature_names[j] for j in subset],
        task=d.task,
    )


def _cv_score(d: Dataset, subset: tuple[int, ...], scoring_config: SpinexConfig) -> float:
    """Mean 3-fold CV score of a default SPINEX restricted to `subset`."""
    sub = _subset_dataset(d, subset)
    n = sub.n_samples
    folds = min(_SELECTION_FOLDS, n)
    if folds < 2:
        model = fit(scoring_config, sub)
        return model.score(sub.features, sub.targets)
    scores = []
    for train, test in kfold_split(n, folds, _SELECTION_SEED):
        model = fit(scoring_config, sub.take_rows(train))
        try:
            scores.append(model.score(sub.features[test], sub.targets[test]))
        except SpinexError:
            continue  # fold with a constant target has no defined R^2
    return float(np.mean(scores)) if scores else -math.inf


def select_features(config: SpinexConfig, d: Dataset) -> list[int]:
    """Greedy forward selection by internal CV, optionally hill-climbed.

    Prioritized features are always kept. The swap search evaluates at most
    d^2 candidate subsets. Deterministic: the CV split seed is fixed and
    ties prefer the lower feature index.
    """
    dcount = d.n_features
    target = config.n_features_to_select
    if target is None:
        target = math.ceil(dcount / 2)
    if not 1 <= target <= dcount:
        raise ValueError(f"n_features_to_select must be in 1..{dcount}, got {target}")
    prioritized = list(config.prioritized_features or ())
    if any(j < 0 or j >= dcount for j in prioritized):
        raise ValueError("prioritized_features contains an invalid column index")
    if len(prioritized) > target:
        raise TooManyPrioritizedFeatures(
            f"{len(prioritized)} prioritized features but only {target} slots"
        )
    if target == dcount:
        return list(range(dcount))

    scoring_config = _selection_scoring_config(d.task)
    cache: dict[tuple[int, ...], float] = {}

    def evaluate(subset: set[int]) -> float:
        key = tuple(sorted(subset))
        if key not in cache:
            cache[key] = _cv_score(d, key, scoring_config)
        return cache[key]

    selected = set(prioritized)
    while len(selected) < target:
        best_j, best_score = None, -math.inf
        for j in range(dcount):
            if j in selected:
                continue
            s = evaluate(selected | {j})
            if best_j is None or s > best_score:
                best_j, best_score = j, s
        selected.add(best_j)

    if config.use_local_search:
        budget = dcount * dcount
        current = evaluate(selected)
        improved = True
        while improved and budget > 0:
            improved = False
            swappable = sorted(selected - set(prioritized))
            outside = sorted(set(range(dcount)) - selected)
            best_swap, best_score = None, current
            for s_out in swappable:
                for s_in in outside:
                    if budget <= 0:
                        break
                    budget -= 1
                    trial = evaluate((selected - {s_out}) | {s_in})
                    if trial > best_score:
                        best_swap, best_score = (s_out, s_in), trial
                if budget <= 0:
                    break
            if best_swap is not None:
                selected = (selected - {best_swap[0]}) | {best_swap[1]}
                current = best_score
                improved = True

    return sorted(selected)
