"""Seeded k-fold and stratified k-fold index splitters."""

from __future__ import annotations

import warnings

import numpy as np

from .errors import TooFewRows


def kfold_split(n: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Partition 0..n-1 into k shuffled test folds with sizes differing by <= 1.

    Returns a list of (train_indices, test_indices) pairs; both arrays are
    sorted ascending for reproducibility.
    """
    if k < 2:
        raise TooFewRows(f"need k >= 2 folds, got {k}")
    if k > n:
        raise TooFewRows(f"cannot split {n} rows into {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        test = perm[start : start + size]
        train = np.concatenate([perm[:start], perm[start + size :]])
        folds.append((np.sort(train), np.sort(test)))
        start += size
    return folds


def stratified_kfold_split(labels: np.ndarray, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """k-fold split preserving per-class proportions within one sample.

    If some class has fewer than k members, k is reduced to that count
    (with a warning). Each class's shuffled members are chunked across
    folds; the oversized chunks rotate between classes so overall fold
    sizes also differ by at most one.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if n == 0:
        raise TooFewRows("cannot split an empty label vector")
    classes, counts = np.unique(labels, return_counts=True)
    min_count = int(counts.min())
    if min_count < k:
        warnings.warn(
            f"smallest class has {min_count} members; reducing folds from {k} to {min_count}",
            stacklevel=2,
        )
        k = min_count
    if k < 2:
        raise TooFewRows("stratified split needs >= 2 members in every class")
    rng = np.random.default_rng(seed)
    fold_members: list[list[np.ndarray]] = [[] for _ in range(k)]
    offset = 0
    for cls in classes:
        members = rng.permutation(np.flatnonzero(labels == cls))
        base, extra = divmod(len(members), k)
        start = 0
        for i in range(k):
            fold = (offset + i) % k
            size = base + (1 if i < extra else 0)
            fold_members[fold].append(members[start : start + size])
            start += size
        offset += extra
    folds = []
    all_idx = np.arange(n)
    for parts in fold_members:
        test = np.sort(np.concatenate(parts))
        train = np.setdiff1d(all_idx, test, assume_unique=True)
        folds.append((train, test))
    return folds
