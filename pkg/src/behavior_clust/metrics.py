"""Clustering evaluation: adjusted Rand index and internal validity indices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError, DegenerateInputError


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray

    @property
    def n(self):
        return int(self.counts.sum())


def contingency_table(labels_a, labels_b):
    labels_a, labels_b = np.asarray(labels_a), np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise DataError(f"label arrays differ in length ({len(labels_a)} vs {len(labels_b)})")
    _, ia = np.unique(labels_a, return_inverse=True)
    _, ib = np.unique(labels_b, return_inverse=True)
    counts = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0))


def _pairs(x):
    x = np.asarray(x, dtype=np.int64)
    return int((x * (x - 1) // 2).sum())


def ari(labels_a, labels_b):
    """Adjusted Rand index. Both-trivial partitions (0/0) give 1.0 if equal, else 0.0."""
    if len(labels_a) != len(labels_b):
        raise DataError(f"label arrays differ in length ({len(labels_a)} vs {len(labels_b)})")
    if len(labels_a) < 2:
        raise DataError("ARI needs at least two items")
    table = contingency_table(labels_a, labels_b)
    index = _pairs(table.counts)
    sum_a, sum_b = _pairs(table.row_sums), _pairs(table.col_sums)
    # (index - expected) / (max_index - expected), scaled by 2 * C(n, 2) so both
    # sides are exact integers and the one division rounds correctly
    pairs = math.comb(table.n, 2)
    num = 2 * index * pairs - 2 * sum_a * sum_b
    den = (sum_a + sum_b) * pairs - 2 * sum_a * sum_b
    if den == 0:
        same = table.counts.shape[0] == table.counts.shape[1] == np.count_nonzero(table.counts)
        return 1.0 if same else 0.0
    return num / den


def _check_labels(x, labels, min_clusters=2):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    labels = np.asarray(labels)
    if len(x) != len(labels):
        raise DataError("matrix rows and labels differ in length")
    uniq, inv = np.unique(labels, return_inverse=True)
    if len(uniq) < min_clusters:
        raise DegenerateInputError(f"need at least {min_clusters} clusters, got {len(uniq)}")
    return x, inv, len(uniq)


def silhouette(x, labels, chunk=2048):
    """Mean silhouette coefficient; points in singleton clusters score 0."""
    x, inv, k = _check_labels(x, labels)
    n = len(x)
    sizes = np.bincount(inv, minlength=k).astype(float)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), inv] = 1.0
    scores = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        sums = cdist(x[start:stop], x) @ onehot          # (m, k) distance totals per cluster
        own = inv[start:stop]
        rows = np.arange(stop - start)
        own_size = sizes[own]
        with np.errstate(invalid="ignore", divide="ignore"):
            a = sums[rows, own] / (own_size - 1)
            means = sums / sizes
        means[rows, own] = np.inf
        b = means.min(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = (b - a) / np.maximum(a, b)
        s[own_size == 1] = 0.0
        s[(own_size > 1) & (np.maximum(a, b) == 0)] = 0.0
        scores[start:stop] = s
    return float(scores.mean())


def _scatter(x, inv, k):
    centroids = np.stack([x[inv == j].mean(axis=0) for j in range(k)])
    overall = x.mean(axis=0)
    sizes = np.bincount(inv, minlength=k)
    between = float((sizes * ((centroids - overall) ** 2).sum(axis=1)).sum())
    within = float(((x - centroids[inv]) ** 2).sum())
    return centroids, between, within


def calinski_harabasz(x, labels):
    """Variance-ratio criterion. Zero within-cluster scatter returns ``math.inf``."""
    x, inv, k = _check_labels(x, labels)
    n = len(x)
    if k >= n:
        raise DegenerateInputError("Calinski-Harabasz needs fewer clusters than points")
    _, between, within = _scatter(x, inv, k)
    if within == 0:
        return math.inf
    return (between / (k - 1)) / (within / (n - k))


def davies_bouldin(x, labels):
    x, inv, k = _check_labels(x, labels)
    centroids = np.stack([x[inv == j].mean(axis=0) for j in range(k)])
    spread = np.array([np.linalg.norm(x[inv == j] - centroids[j], axis=1).mean() for j in range(k)])
    sep = cdist(centroids, centroids)
    np.fill_diagonal(sep, np.inf)
    if (sep == 0).any():
        raise DegenerateInputError("Davies-Bouldin undefined: two clusters share a centroid")
    ratio = (spread[:, None] + spread[None, :]) / sep
    return float(ratio.max(axis=1).mean())


def cluster_purity(pred, truth):
    """Fraction of items whose cluster's majority ground-truth label matches their own."""
    table = contingency_table(pred, truth)
    return float(table.counts.max(axis=1).sum() / table.n)
