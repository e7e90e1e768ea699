"""K-means and DBSCAN baselines, with elbow analysis and a DBSCAN grid search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ._runtime import derive_seed, ordered_map
from .errors import DataError
from .metrics import ari


@dataclass
class KmeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    sse: float
    iterations: int
    sse_history: list = field(default_factory=list)


def _as_matrix(x):
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def kmeans_plusplus(x, k, rng):
    n = len(x)
    centers = [int(rng.integers(n))]
    d2 = ((x - x[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with a chosen center: pick any unchosen row
            free = np.setdiff1d(np.arange(n), centers)
            nxt = int(rng.choice(free))
        centers.append(nxt)
        d2 = np.minimum(d2, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[centers].copy()


def _lloyd(x, centroids, max_iter):
    k = len(centroids)
    history = []
    labels = None
    it = 0
    for it in range(1, max_iter + 1):
        d2 = cdist(x, centroids, "sqeuclidean")
        new_labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(x)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        point_d2 = d2[np.arange(len(x)), labels]
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = x[members].mean(axis=0)
            else:
                # empty cluster: move it onto the point farthest from its centroid
                far = int(point_d2.argmax())
                centroids[j] = x[far]
                labels[far] = j
                point_d2[far] = 0.0
    d2 = cdist(x, centroids, "sqeuclidean")
    labels = d2.argmin(axis=1)
    sse = float(d2[np.arange(len(x)), labels].sum())
    if not history or history[-1] != sse:
        history.append(sse)
    return KmeansResult(labels, centroids, sse, it, history)


def kmeans(matrix, k, max_iter=300, rng_seed=0, n_init=10):
    """Lloyd's algorithm from k-means++ seeds; the lowest-SSE of ``n_init`` restarts wins."""
    x = _as_matrix(matrix)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(x):
        raise DataError(f"k={k} exceeds the {len(x)} rows")
    best = None
    for r in range(n_init):
        rng = np.random.default_rng(derive_seed(rng_seed, r))
        res = _lloyd(x, kmeans_plusplus(x, k, rng), max_iter)
        if best is None or res.sse < best.sse:
            best = res
    return best


def elbow_curve(matrix, k_range, rng_seed=0, n_init=10, threads=1):
    """[(k, sse)] with the SSE forced non-increasing by a running minimum."""
    x = _as_matrix(matrix)
    ks = sorted(int(k) for k in k_range)
    if ks and ks[-1] > len(x):
        raise DataError(f"k={ks[-1]} exceeds the {len(x)} rows")
    sses = ordered_map(lambda k: kmeans(x, k, rng_seed=rng_seed, n_init=n_init).sse, ks, threads)
    out, running = [], np.inf
    for k, s in zip(ks, sses):
        running = min(running, s)
        out.append((k, running))
    return out


# ---------------------------------------------------------------- DBSCAN

@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps <= 0 or self.min_pts < 1:
            raise ValueError("eps must be positive and min_pts >= 1")


NOISE = -1


def _neighborhoods(dist, eps):
    return [np.flatnonzero(row <= eps) for row in dist]


def _dbscan_from_neighbors(neighbors, min_pts):
    n = len(neighbors)
    core = np.array([len(nb) >= min_pts for nb in neighbors])
    labels = np.full(n, NOISE, dtype=int)
    cid = 0
    for p in range(n):
        if labels[p] != NOISE or not core[p]:
            continue
        labels[p] = cid
        queue = deque([p])
        while queue:
            q = queue.popleft()
            if not core[q]:
                continue
            for r in neighbors[q]:
                if labels[r] == NOISE:
                    labels[r] = cid
                    if core[r]:
                        queue.append(r)
        cid += 1
    return labels


def dbscan(matrix, params, dist=None):
    """Density-based clustering in row order; -1 marks noise. ``dist`` may pass a precomputed matrix."""
    x = _as_matrix(matrix)
    if dist is None:
        dist = cdist(x, x)
    return _dbscan_from_neighbors(_neighborhoods(dist, params.eps), params.min_pts)


DEFAULT_EPS_GRID = tuple(float(e) for e in np.linspace(0.1, 2.0, 20))
DEFAULT_MINPTS_GRID = tuple(range(1, 21))


@dataclass
class GridSearchResult:
    best_params: DbscanParams
    best_ari: float
    cells: list


def dbscan_grid_search(matrix, true_labels, eps_grid=DEFAULT_EPS_GRID,
                       minpts_grid=DEFAULT_MINPTS_GRID, threads=1):
    """Evaluate every (eps, min_pts) cell by ARI against ``true_labels``; keep the first best."""
    if true_labels is None:
        raise DataError("grid search needs ground-truth labels")
    x = _as_matrix(matrix)
    true_labels = np.asarray(true_labels)
    dist = cdist(x, x)

    def run_eps(eps):
        neighbors = _neighborhoods(dist, eps)
        cells = []
        for m in minpts_grid:
            labels = _dbscan_from_neighbors(neighbors, int(m))
            cells.append({"eps": float(eps), "min_pts": int(m), "ari": ari(labels, true_labels),
                          "n_clusters": int(labels.max()) + 1,
                          "n_noise": int((labels == NOISE).sum())})
        return cells

    cells = [c for group in ordered_map(run_eps, eps_grid, threads) for c in group]
    best = max(cells, key=lambda c: c["ari"])  # max() keeps the first of equal scores
    return GridSearchResult(DbscanParams(best["eps"], best["min_pts"]), best["ari"], cells)
