"""Bagging, boosting, and stacking wrappers around SPINEX base models.

The base learner has no native sample weights, so boosting classifiers use
adaptive reweighting with weighted resampling; boosting regressors fit
forward-stagewise residuals. Stacking learns a ridge-damped linear
combiner on out-of-fold base predictions, then refits the bases on the
full data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .cv import kfold_split
from .data import CLASSIFICATION, REGRESSION, Dataset
from .errors import DegenerateRound, EmptyDataset, TooFewRowsForFolds
from .predictor import SpinexConfig, SpinexModel, fit, predict_proba

BAGGING = "bagging"
BOOSTING = "boosting"
STACKING = "stacking"

_RIDGE_DAMPING = 1e-8
_MAX_ROUND_RETRIES = 3
_EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class EnsembleModel:
    kind: str
    task: str
    members: list[SpinexModel]
    feature_names: list[str]
    class_labels: np.ndarray | None = None
    member_weights: np.ndarray | None = None  # boosting
    combiner: np.ndarray | None = None        # stacking, intercept last

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict_ensemble(self, X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return predict_ensemble_proba(self, X)


def _member_proba_global(member: SpinexModel, X: np.ndarray, class_labels: np.ndarray) -> np.ndarray:
    """Member probabilities widened to the ensemble's global class columns."""
    probs = predict_proba(member, X)
    if np.array_equal(member.class_labels, class_labels):
        return probs
    out = np.zeros((probs.shape[0], len(class_labels)))
    cols = np.searchsorted(class_labels, member.class_labels)
    out[:, cols] = probs
    return out


def fit_bagging(config: SpinexConfig, d: Dataset, p: int, sample_fraction: float = 1.0,
                seed: int = 0, deterministic_full_sample: bool = False) -> EnsembleModel:
    """p members, each fit on a with-replacement sample of ceil(fraction*n) rows.

    With ``deterministic_full_sample`` and fraction 1, every member trains
    on the data verbatim (the degenerate single-model case).
    """
    if d.n_samples == 0:
        raise EmptyDataset("cannot bag an empty dataset")
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0 < sample_fraction <= 1:
        raise ValueError("sample_fraction must be in (0, 1]")
    rng = np.random.default_rng(seed)
    n = d.n_samples
    size = math.ceil(sample_fraction * n)
    members = []
    for _ in range(p):
        if deterministic_full_sample and sample_fraction == 1.0:
            idx = np.arange(n)
        else:
            idx = rng.choice(n, size=size, replace=True)
        members.append(fit(config, d.take_rows(idx)))
    labels = np.unique(d.targets) if d.task == CLASSIFICATION else None
    return EnsembleModel(kind=BAGGING, task=d.task, members=members,
                         feature_names=list(d.feature_names), class_labels=labels)


def fit_boosting(config: SpinexConfig, d: Dataset, p: int, learning_rate: float = 1.0,
                 seed: int = 0) -> EnsembleModel:
    """Adaptive-reweighting rounds (classification) or residual fitting (regression)."""
    if d.n_samples == 0:
        raise EmptyDataset("cannot boost an empty dataset")
    if p < 1:
        raise ValueError("p must be >= 1")
    if learning_rate <= 0:
        raise ValueError("learning_rate must be > 0")
    if d.task == CLASSIFICATION:
        return _fit_boosting_classifier(config, d, p, learning_rate, seed)
    return _fit_boosting_regressor(config, d, p, learning_rate)


def _fit_boosting_classifier(config, d, p, learning_rate, seed) -> EnsembleModel:
    rng = np.random.default_rng(seed)
    n = d.n_samples
    labels = np.unique(d.targets)
    K = len(labels)
    sample_weights = np.full(n, 1.0 / n)
    members, alphas = [], []
    for round_no in range(p):
        member = None
        for attempt in range(_MAX_ROUND_RETRIES + 1):
            idx = rng.choice(n, size=n, replace=True, p=sample_weights)
            candidate = fit(config, d.take_rows(idx))
            miss = candidate.predict(d.features) != d.targets
            eps = float(sample_weights[miss].sum())
            if eps < 1.0 - 1.0 / K:
                member = candidate
                break
        if member is None:
            if round_no == 0:
                raise DegenerateRound(
                    "no usable first boosting round after "
                    f"{_MAX_ROUND_RETRIES + 1} attempts"
                )
            break  # stop early, keep the rounds collected so far
        eps = max(eps, _EPS_FLOOR)
        alpha = learning_rate * math.log((1.0 - eps) / eps * max(K - 1, 1))
        members.append(member)
        alphas.append(alpha)
        sample_weights = sample_weights * np.where(miss, math.exp(alpha), 1.0)
        sample_weights /= sample_weights.sum()
    return EnsembleModel(kind=BOOSTING, task=CLASSIFICATION, members=members,
                         feature_names=list(d.feature_names), class_labels=labels,
                         member_weights=np.asarray(alphas))


def _fit_boosting_regressor(config, d, p, learning_rate) -> EnsembleModel:
    members = [fit(config, d)]
    weights = [1.0]
    running = members[0].predict(d.features)
    for _ in range(1, p):
        residuals = d.targets - running
        member = fit(config, replace(d, targets=residuals))
        members.append(member)
        weights.append(learning_rate)
        running = running + learning_rate * member.predict(d.features)
    return EnsembleModel(kind=BOOSTING, task=REGRESSION, members=members,
                         feature_names=list(d.feature_names),
                         member_weights=np.asarray(weights))


def stacking_meta_features(base_configs: list[SpinexConfig], d: Dataset,
                           folds: int, seed: int) -> np.ndarray:
    """Out-of-fold base predictions: the combiner's training inputs.

    One column per base for regression; one probability block per base
    (columns = sorted global labels) for classification. Row i is produced
    by models that never saw row i's target.
    """
    n = d.n_samples
    if folds < 2 or folds > n:
        raise TooFewRowsForFolds(f"cannot build {folds} folds from {n} rows")
    splits = kfold_split(n, folds, seed)
    if d.task == REGRESSION:
        Z = np.zeros((n, len(base_configs)))
        for b, cfg in enumerate(base_configs):
            for train, test in splits:
                model = fit(cfg, d.take_rows(train))
                Z[test, b] = model.predict(d.features[test])
        return Z
    labels = np.unique(d.targets)
    K = len(labels)
    Z = np.zeros((n, len(base_configs) * K))
    for b, cfg in enumerate(base_configs):
        for train, test in splits:
            model = fit(cfg, d.take_rows(train))
            Z[test, b * K : (b + 1) * K] = _member_proba_global(model, d.features[test], labels)
    return Z


def _ridge_solve(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    gram = A.T @ A + _RIDGE_DAMPING * np.eye(A.shape[1])
    return np.linalg.solve(gram, A.T @ y)


def fit_stacking(base_configs: list[SpinexConfig], d: Dataset, folds: int = 5,
                 seed: int = 0) -> EnsembleModel:
    """Linear combiner over out-of-fold base outputs; bases refit on all rows."""
    if not base_configs:
        raise ValueError("stacking needs at least one base config")
    if d.n_samples == 0:
        raise EmptyDataset("cannot stack an empty dataset")
    Z = stacking_meta_features(base_configs, d, folds, seed)
    A = np.hstack([Z, np.ones((Z.shape[0], 1))])
    if d.task == REGRESSION:
        combiner = _ridge_solve(A, d.targets.astype(float))
        labels = None
    else:
        labels = np.unique(d.targets)
        onehot = (d.targets[:, None] == labels[None, :]).astype(float)
        combiner = _ridge_solve(A, onehot)
    members = [fit(cfg, d) for cfg in base_configs]
    return EnsembleModel(kind=STACKING, task=d.task, members=members,
                         feature_names=list(d.feature_names), class_labels=labels,
                         combiner=combiner)


def _stacking_inputs(em: EnsembleModel, X: np.ndarray) -> np.ndarray:
    if em.task == REGRESSION:
        Z = np.column_stack([member.predict(X) for member in em.members])
    else:
        Z = np.hstack([_member_proba_global(m, X, em.class_labels) for m in em.members])
    return np.hstack([Z, np.ones((Z.shape[0], 1))])


def _vote(labels_matrix: np.ndarray, vote_weights: np.ndarray, class_labels: np.ndarray) -> np.ndarray:
    """Weighted vote over member label predictions; ties to the smaller label."""
    scores = np.zeros((labels_matrix.shape[1], len(class_labels)))
    for t in range(labels_matrix.shape[0]):
        encoded = np.searchsorted(class_labels, labels_matrix[t])
        scores[np.arange(scores.shape[0]), encoded] += vote_weights[t]
    return class_labels[np.argmax(scores, axis=1)]


def predict_ensemble(em: EnsembleModel, X: np.ndarray) -> np.ndarray:
    if em.kind == BAGGING:
        preds = np.stack([m.predict(X) for m in em.members])
        if em.task == REGRESSION:
            return preds.mean(axis=0)
        return _vote(preds, np.ones(len(em.members)), em.class_labels)
    if em.kind == BOOSTING:
        if em.task == REGRESSION:
            preds = np.stack([m.predict(X) for m in em.members])
            return em.member_weights @ preds
        preds = np.stack([m.predict(X) for m in em.members])
        return _vote(preds, em.member_weights, em.class_labels)
    if em.kind == STACKING:
        scores = _stacking_inputs(em, X) @ em.combiner
        if em.task == REGRESSION:
            return scores
        return em.class_labels[np.argmax(scores, axis=1)]
    raise ValueError(f"unknown ensemble kind {em.kind!r}")


def predict_ensemble_proba(em: EnsembleModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities for classification ensembles.

    Bagging averages member probabilities; boosting normalizes the
    alpha-weighted vote mass; stacking clips its linear class scores to
    [0, 1] and renormalizes (uniform on degenerate rows).
    """
    if em.task != CLASSIFICATION:
        raise ValueError("predict_proba requires a classification ensemble")
    if em.kind == BAGGING:
        stacks = np.stack([_member_proba_global(m, X, em.class_labels) for m in em.members])
        return stacks.mean(axis=0)
    if em.kind == BOOSTING:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        scores = np.zeros((X.shape[0], len(em.class_labels)))
        for alpha, m in zip(em.member_weights, em.members):
            encoded = np.searchsorted(em.class_labels, m.predict(X))
            scores[np.arange(scores.shape[0]), encoded] += alpha
    else:
        scores = np.clip(_stacking_inputs(em, X) @ em.combiner, 0.0, 1.0)
    totals = scores.sum(axis=1, keepdims=True)
    dead = totals[:, 0] <= 0
    probs = scores / np.where(totals <= 0, 1.0, totals)
    if dead.any():
        probs[dead] = 1.0 / scores.shape[1]
    return probs
