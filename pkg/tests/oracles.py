"""Independent brute-force oracles used across the test suite.

Everything here is written against the definitions directly (loops,
sorting, exhaustive enumeration) and never calls into the package's fast
paths, so a test that compares the two genuinely checks the implementation.
"""

import math

import numpy as np


def manhattan(a, b):
    return sum(abs(x - y) for x, y in zip(a, b))


def euclidean(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def knn_indices(train, query, k, metric="manhattan"):
    """Stable full-sort top-k: ascending distance, ties by lower train index."""
    dist = manhattan if metric == "manhattan" else euclidean
    scored = sorted(range(len(train)), key=lambda i: (dist(train[i], query), i))
    return scored[: min(k, len(train))]


def knn_regression(train_X, train_y, query, k, metric="manhattan"):
    idx = knn_indices(train_X, query, k, metric)
    return sum(train_y[i] for i in idx) / len(idx)


def knn_majority(train_X, train_y, query, k, metric="manhattan"):
    """Plain majority vote; ties go to the smallest label."""
    idx = knn_indices(train_X, query, k, metric)
    counts = {}
    for i in idx:
        counts[train_y[i]] = counts.get(train_y[i], 0) + 1
    best = max(counts.values())
    return min(label for label, c in counts.items() if c == best)


def weighted_mean(values, weights):
    total = math.fsum(weights)
    if total == 0:
        return math.fsum(values) / len(values)
    return math.fsum(v * w for v, w in zip(values, weights)) / total


def gaussian_weight(d, sigma):
    if sigma == 0:
        return 1.0
    return math.exp(-(d * d) / (2 * sigma * sigma))


def auc_pairwise(labels, scores):
    """O(n^2) Mann-Whitney: wins plus half-ties over all pos/neg pairs."""
    pos = [s for lbl, s in zip(labels, scores) if lbl == 1]
    neg = [s for lbl, s in zip(labels, scores) if lbl == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def quantile_linear(sorted_values, q):
    """Linear-interpolation quantile straight from the definition."""
    n = len(sorted_values)
    pos = q * (n - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def family_formula(family, row):
    """Per-row reimplementation of every generator target formula."""
    d = len(row)
    tail = lambda: math.fsum(row[j] ** j for j in range(1, d))
    if family == "synthetic":
        return row[0] + tail()
    if family == "cubic":
        return row[0] + math.fsum(row[j] ** (j + 2) for j in range(1, d))
    if family == "exponential":
        return math.exp(row[0]) + tail()
    if family == "step":
        return (1.0 if row[0] >= 0.5 else 0.0) + tail()
    if family == "complex_interaction":
        return row[0] ** 2 + math.sin(row[1]) * math.log(row[2] ** 2 + 1.0)
    if family == "polynomial":
        return row[0] ** 3 + row[1] ** 4 - row[2] ** 5
    if family == "exp_log":
        return math.exp(row[0]) * math.log1p(row[1])
    if family == "sin_exp":
        return math.sin(math.pi * row[0]) * math.exp(row[1])
    if family == "tan":
        return math.tan(row[0]) + tail()
    raise ValueError(family)


def contribution_two_call(model, x, k, predict_quantity):
    """C_k from two independent predictions; never calls the explain module.

    ``predict_quantity(row)`` must return the scalar being differenced
    (prediction for regression, fixed-class probability for classification).
    """
    base = predict_quantity(x)
    x_excl = np.array(x, dtype=float, copy=True)
    if model.config.exclude_method == "zero":
        x_excl[k] = 0.0
    else:
        x_excl[k] = model.feature_means[k]
    return base - predict_quantity(x_excl)
