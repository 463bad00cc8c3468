"""Performance metrics and the rank-sum model-ranking procedure.

Metrics are kept deliberately small and direct; the AUC uses the
Mann-Whitney rank formulation (grouped thresholds with half credit for
ties), which equals the trapezoidal area under the tie-grouped ROC curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstantActuals,
    EmptyInput,
    InvalidProbabilityRow,
    LengthMismatch,
    MissingCell,
    SingleClassPresent,
)

LOWER_BETTER = "lower_better"
HIGHER_BETTER = "higher_better"

PROB_CLAMP = 1e-15

# the paper's paired rank columns: quality metrics vs cost metrics
REGRESSION_ACCURACY_GROUP = {"mae": LOWER_BETTER, "r2": HIGHER_BETTER}
CLASSIFICATION_ACCURACY_GROUP = {
    "accuracy": HIGHER_BETTER,
    "logloss": LOWER_BETTER,
    "auc": HIGHER_BETTER,
}
COST_GROUP = {"total_time_s": LOWER_BETTER, "estimated_energy": LOWER_BETTER}


def _check_lengths(a: np.ndarray, b: np.ndarray):
    if len(a) != len(b):
        raise LengthMismatch(f"length {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise EmptyInput("empty metric input")


def mae(actual, predicted) -> float:
    """Mean absolute error."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    _check_lengths(actual, predicted)
    return float(np.abs(predicted - actual).mean())


def r2(actual, predicted) -> float:
    """Coefficient of determination; <= 1 and negative for worse-than-mean fits."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    _check_lengths(actual, predicted)
    if len(actual) < 2:
        raise EmptyInput("r2 needs at least 2 points")
    ss_tot = float(((actual - actual.mean()) ** 2).sum())
    if ss_tot == 0:
        raise ConstantActuals("r2 undefined for constant actuals")
    ss_res = float(((predicted - actual) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def accuracy(actual, predicted) -> float:
    """Fraction of exact label matches."""
    actual = np.asarray(actual)
    predicted = np.asarray(predicted)
    _check_lengths(actual, predicted)
    return float(np.mean(actual == predicted))


def logloss(actual, probabilities) -> float:
    """Mean negative log probability of the true class, clamped at 1e-15."""
    actual = np.asarray(actual, dtype=int)
    probs = np.atleast_2d(np.asarray(probabilities, dtype=float))
    _check_lengths(actual, probs)
    sums = probs.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-6)
    if bad.size:
        raise InvalidProbabilityRow(int(bad[0]))
    if actual.min() < 0 or actual.max() >= probs.shape[1]:
        raise ValueError("labels out of range for the probability matrix")
    picked = probs[np.arange(len(actual)), actual]
    picked = np.clip(picked, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.log(picked).mean())


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged (midrank convention)."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def auc(actual, scores) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic.

    Equivalent to counting score wins of positives over negatives with half
    credit for ties, divided by n_pos * n_neg.
    """
    actual = np.asarray(actual, dtype=int)
    scores = np.asarray(scores, dtype=float)
    _check_lengths(actual, scores)
    pos = actual == 1
    n_pos = int(pos.sum())
    n_neg = len(actual) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassPresent("AUC needs both classes present")
    ranks = _average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def estimated_energy(model_size_mb: float, train_time_s: float, predict_time_s: float) -> float:
    """Functional cost in MB*s: model size times total fit+predict time."""
    return model_size_mb * (train_time_s + predict_time_s)


@dataclass(frozen=True)
class MetricRecord:
    """Aggregated metrics for one (model, dataset) cell.

    Carries the task metrics (mae/r2 or accuracy/logloss/auc) together with
    train_time_s, predict_time_s, model_size_mb and estimated_energy; the
    energy entry must equal size * (train + predict) when all are present.
    """

    model_name: str
    dataset_name: str
    metrics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        m = self.metrics
        needed = {"model_size_mb", "train_time_s", "predict_time_s", "estimated_energy"}
        if needed <= m.keys():
            expected = m["model_size_mb"] * (m["train_time_s"] + m["predict_time_s"])
            if abs(m["estimated_energy"] - expected) > 1e-9 * max(1.0, abs(expected)):
                raise ValueError("estimated_energy inconsistent with size and times")

    def value(self, metric: str) -> float:
        if metric == "total_time_s" and metric not in self.metrics:
            return self.metrics["train_time_s"] + self.metrics["predict_time_s"]
        return self.metrics[metric]


@dataclass(frozen=True)
class RankTable:
    """Per-metric averages and ranks plus the rank-sum ordering for one group."""

    models: list[str]
    metrics: list[str]
    averages: dict[str, dict[str, float]]  # metric -> model -> mean across datasets
    ranks: dict[str, dict[str, int]]       # metric -> model -> rank (ties share min)
    rank_sum: dict[str, int]
    overall_rank: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "models": list(self.models),
            "metrics": list(self.metrics),
            "averages": {m: dict(v) for m, v in self.averages.items()},
            "ranks": {m: dict(v) for m, v in self.ranks.items()},
            "rank_sum": dict(self.rank_sum),
            "overall_rank": dict(self.overall_rank),
        }


def _min_ranks(values: list[float], lower_better: bool) -> list[int]:
    """Competition ranking: tied values share the lowest rank (1, 2, 2, 4...)."""
    keyed = sorted(range(len(values)), key=lambda i: values[i], reverse=not lower_better)
    ranks = [0] * len(values)
    for pos, i in enumerate(keyed):
        if pos > 0 and values[i] == values[keyed[pos - 1]]:
            ranks[i] = ranks[keyed[pos - 1]]
        else:
            ranks[i] = pos + 1
    return ranks


def rank_models(records: list[MetricRecord], metric_directions: dict[str, str]) -> RankTable:
    """Average each metric across datasets per model, rank, and sum the ranks.

    Every model must have a record for every dataset seen in `records`.
    Output is independent of record order: models are sorted by first
    appearance, datasets collated by name.
    """
    models: list[str] = []
    datasets: list[str] = []
    by_cell: dict[tuple[str, str], MetricRecord] = {}
    for rec in records:
        if rec.model_name not in models:
            models.append(rec.model_name)
        if rec.dataset_name not in datasets:
            datasets.append(rec.dataset_name)
        by_cell[(rec.model_name, rec.dataset_name)] = rec
    for model in models:
        for ds in datasets:
            if (model, ds) not in by_cell:
                raise MissingCell(model, ds)

    metrics = list(metric_directions)
    averages: dict[str, dict[str, float]] = {}
    ranks: dict[str, dict[str, int]] = {}
    sums = {model: 0 for model in models}
    for metric in metrics:
        means = [
            float(np.mean([by_cell[(model, ds)].value(metric) for ds in datasets]))
            for model in models
        ]
        metric_ranks = _min_ranks(means, metric_directions[metric] == LOWER_BETTER)
        averages[metric] = dict(zip(models, means))
        ranks[metric] = dict(zip(models, metric_ranks))
        for model, r in zip(models, metric_ranks):
            sums[model] += r
    overall = _min_ranks([sums[m] for m in models], lower_better=True)
    return RankTable(
        models=models,
        metrics=metrics,
        averages=averages,
        ranks=ranks,
        rank_sum=sums,
        overall_rank=dict(zip(models, overall)),
    )
