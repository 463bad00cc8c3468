"""Pairwise distances and neighbor-weight kernels.

Distances are accumulated feature by feature so that a query identical to
a reference row comes out exactly 0 (no squared-norm expansion tricks).
Neighbor selection is ascending by distance with ties broken by the lower
training index, matching a stable full sort.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveKernelWidth

MANHATTAN = "manhattan"
EUCLIDEAN = "euclidean"

GAUSSIAN = "gaussian"
RECIPROCAL = "reciprocal"
UNIFORM = "uniform"

RECIPROCAL_FLOOR = 1e-12

# rows per block when materializing distance sub-matrices (memory bound)
_BLOCK_CELLS = 4_000_000


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray  # (n_queries, n_refs), entries >= 0
    metric: str


@dataclass(frozen=True)
class NeighborSet:
    """Top-k neighbors of one query: train indices ascending by distance."""

    indices: np.ndarray
    distances: np.ndarray
    weights: np.ndarray


def _distance_block(queries: np.ndarray, refs: np.ndarray, metric: str) -> np.ndarray:
    out = np.zeros((queries.shape[0], refs.shape[0]))
    if metric == MANHATTAN:
        for j in range(refs.shape[1]):
            out += np.abs(queries[:, j : j + 1] - refs[None, :, j])
        return out
    if metric == EUCLIDEAN:
        for j in range(refs.shape[1]):
            diff = queries[:, j : j + 1] - refs[None, :, j]
            out += diff * diff
        return np.sqrt(out)
    raise ValueError(f"unknown metric {metric!r}")


def pairwise_distances(queries: np.ndarray, refs: np.ndarray, metric: str = MANHATTAN) -> DistanceMatrix:
    """Dense (n_queries, n_refs) distance matrix under the given metric."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    if queries.shape[1] != refs.shape[1]:
        raise DimensionMismatch(
            f"queries have {queries.shape[1]} columns, refs have {refs.shape[1]}"
        )
    block = max(1, _BLOCK_CELLS // max(1, refs.shape[0]))
    parts = [
        _distance_block(queries[s : s + block], refs, metric)
        for s in range(0, queries.shape[0], block)
    ]
    values = np.vstack(parts) if parts else np.zeros((0, refs.shape[0]))
    return DistanceMatrix(values=values, metric=metric)


def top_k_indices(distances: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row k smallest entries of a distance block.

    Returns (indices, distances), each (n_rows, k), ordered ascending by
    distance with ties broken by lower column index. Uses argpartition with
    an exact fallback for rows where ties straddle the k-th position.
    """
    distances = np.atleast_2d(distances)
    n_rows, n = distances.shape
    k = min(k, n)
    if k == n:
        idx = np.argsort(distances, axis=1, kind="stable")
        return idx, np.take_along_axis(distances, idx, axis=1)
    part = np.argpartition(distances, k - 1, axis=1)[:, :k]
    part.sort(axis=1)  # ascending index, so the stable sort below breaks ties by index
    dsel = np.take_along_axis(distances, part, axis=1)
    order = np.argsort(dsel, axis=1, kind="stable")
    idx = np.take_along_axis(part, order, axis=1)
    dst = np.take_along_axis(dsel, order, axis=1)
    kth = dst[:, -1]
    ambiguous = np.flatnonzero((distances <= kth[:, None]).sum(axis=1) > k)
    for i in ambiguous:
        row = distances[i]
        cand = np.flatnonzero(row <= kth[i])
        keep = cand[np.argsort(row[cand], kind="stable")][:k]
        idx[i] = keep
        dst[i] = row[keep]
    return idx, dst


def gaussian_weight_rows(dst: np.ndarray, kernel_width: float) -> np.ndarray:
    """exp(-d^2 / (2 sigma^2)) row-wise, sigma = kernel_width * mean(selected).

    Rows whose selected distances are all zero get uniform weight 1.
    """
    if kernel_width <= 0:
        raise NonPositiveKernelWidth(f"kernel_width must be > 0, got {kernel_width}")
    sigma = kernel_width * dst.mean(axis=1)
    safe = np.where(sigma == 0, 1.0, sigma)
    w = np.exp(-(dst * dst) / (2.0 * safe * safe)[:, None])
    w[sigma == 0] = 1.0
    return w


def reciprocal_weight_rows(dst: np.ndarray, distance_threshold: float, decay: float) -> np.ndarray:
    """1 / (d_r + threshold * decay^rank) row-wise, denominator floored."""
    ranks = np.arange(dst.shape[1])
    denom = dst + distance_threshold * np.power(decay, ranks)[None, :]
    return 1.0 / np.maximum(denom, RECIPROCAL_FLOOR)


def weight_rows(dst: np.ndarray, weighting: str, kernel_width: float = 1.0,
                distance_threshold: float = 0.05, decay: float = 0.05) -> np.ndarray:
    if weighting == GAUSSIAN:
        return gaussian_weight_rows(dst, kernel_width)
    if weighting == RECIPROCAL:
        return reciprocal_weight_rows(dst, distance_threshold, decay)
    if weighting == UNIFORM:
        return np.ones_like(dst)
    raise ValueError(f"unknown weighting {weighting!r}")


def gaussian_weights(row: np.ndarray, n_neighbors: int, kernel_width: float = 1.0) -> NeighborSet:
    """NeighborSet for one distance row under the Gaussian kernel."""
    if n_neighbors < 1:
        raise ValueError("n_neighbors must be >= 1")
    if kernel_width <= 0:
        raise NonPositiveKernelWidth(f"kernel_width must be > 0, got {kernel_width}")
    row = np.asarray(row, dtype=float)
    idx, dst = top_k_indices(row[None, :], n_neighbors)
    w = gaussian_weight_rows(dst, kernel_width)
    return NeighborSet(indices=idx[0], distances=dst[0], weights=w[0])


def reciprocal_weights(row: np.ndarray, n_neighbors: int, distance_threshold: float = 0.05,
                       decay: float = 0.05) -> NeighborSet:
    """NeighborSet for one distance row under decayed-threshold reciprocal weighting."""
    if n_neighbors < 1:
        raise ValueError("n_neighbors must be >= 1")
    row = np.asarray(row, dtype=float)
    idx, dst = top_k_indices(row[None, :], n_neighbors)
    w = reciprocal_weight_rows(dst, distance_threshold, decay)
    return NeighborSet(indices=idx[0], distances=dst[0], weights=w[0])
