"""Monte-Carlo search for a dense, single-behavior seed subset of TAAT rows."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._runtime import derive_seed, ordered_map
from .errors import DataError
from .features import TaatMatrix, taat_matrix

# Fixed draw-chunk size: chunking must not depend on the thread count.
CHUNK = 16384


@dataclass(frozen=True)
class SeedConfig:
    z: int = 1_000_000
    g: int = 6
    g2_fraction: float = 0.04
    rng_seed: int = 0

    def __post_init__(self):
        if self.z < 1:
            raise ValueError("z must be positive")
        if self.g < 2:
            raise ValueError("g must be at least 2")
        if not 0 < self.g2_fraction <= 0.1:
            raise ValueError("g2_fraction must lie in (0, 0.1]")

    def g2(self, n):
        return int(round(self.g2_fraction * n))


@dataclass(frozen=True)
class SeedSet:
    indices: np.ndarray
    centroid: np.ndarray
    mean_pairwise_distance: float

    def __len__(self):
        return len(self.indices)


def _rows(taat):
    return taat.rows if isinstance(taat, TaatMatrix) else np.asarray(taat, dtype=float)


def mean_pairwise_distance(points):
    """Mean Euclidean distance over the g*(g-1)/2 unordered pairs of each subset.

    ``points`` has shape (..., g, dim); the result drops the last two axes.
    """
    g = points.shape[-2]
    iu, ju = np.triu_indices(g, k=1)
    diff = points[..., iu, :] - points[..., ju, :]
    return np.sqrt((diff ** 2).sum(axis=-1)).mean(axis=-1)


def _draw_chunk(n, g, size, seed):
    """``size`` index subsets of size g, duplicates inside a subset rejected and redrawn."""
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, n, size=(size, g))
    while True:
        srt = np.sort(draws, axis=1)
        bad = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
        if len(bad) == 0:
            return draws
        draws[bad] = rng.integers(0, n, size=(len(bad), g))


def draw_subsets(n, g, z, rng_seed):
    """Yield the z Monte-Carlo subsets in fixed-size chunks, reproducibly."""
    for c, start in enumerate(range(0, z, CHUNK)):
        yield _draw_chunk(n, g, min(CHUNK, z - start), derive_seed(rng_seed, c))


def _seed_set(rows, indices):
    indices = np.sort(np.asarray(indices, dtype=int))
    pts = rows[indices]
    mpd = float(mean_pairwise_distance(pts[None])[0]) if len(indices) > 1 else 0.0
    return SeedSet(indices, pts.mean(axis=0), mpd)


def mcs_seed(taat, config, threads=1):
    """Best of ``config.z`` random size-g subsets by mean pairwise distance (first-drawn wins ties)."""
    rows = _rows(taat)
    n, g = len(rows), config.g
    if n < g:
        raise DataError(f"need at least g={g} rows, got {n}")
    if n == g:
        return _seed_set(rows, np.arange(n))

    def best_of_chunk(c):
        start = c * CHUNK
        draws = _draw_chunk(n, g, min(CHUNK, config.z - start), derive_seed(config.rng_seed, c))
        scores = mean_pairwise_distance(rows[draws])
        j = int(np.argmin(scores))
        return scores[j], draws[j]

    n_chunks = -(-config.z // CHUNK)
    best_score, best = np.inf, None
    for score, draw in ordered_map(best_of_chunk, range(n_chunks), threads):
        if score < best_score:
            best_score, best = score, draw
    return _seed_set(rows, best)


def expand_seed(taat, seed, config, g2=None):
    """Replace the seed by the g2 rows nearest its centroid (one expansion step).

    ``g2`` defaults to ``round(config.g2_fraction * n)``; ties go to the lower index.
    """
    rows = _rows(taat)
    n = len(rows)
    if g2 is None:
        g2 = config.g2(n)
    if g2 > n:
        raise DataError(f"g2={g2} exceeds the {n} available rows")
    if g2 < 1:
        raise DataError("g2 must be positive")
    dist = np.linalg.norm(rows - seed.centroid, axis=1)
    nearest = np.sort(np.argsort(dist, kind="stable")[:g2])
    return _seed_set(rows, nearest)


# ---------------------------------------------------------------- purity experiment

@dataclass(frozen=True)
class PurityRow:
    g: int
    repeats: int
    success_rate: float


def seed_purity_experiment(dataset, g_values, repeats=100, z=1_000_000, rng_seed=0,
                           kind="arithmetic", shift=0.0, threads=1):
    """Fraction of MCS runs, per g, whose subset carries a single ground-truth label."""
    labels = dataset.labels
    if labels is None:
        raise DataError("seed purity needs ground-truth labels")
    tm = taat_matrix(dataset, kind, shift)
    table = []
    for g in g_values:
        hits = 0
        for r in range(repeats):
            cfg = SeedConfig(z=z, g=int(g), rng_seed=derive_seed(rng_seed, int(g), r))
            seed = mcs_seed(tm, cfg, threads=threads)
            hits += len(np.unique(labels[seed.indices])) == 1
        table.append(PurityRow(int(g), int(repeats), hits / repeats))
    return table


def purity_to_csv(table, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["g", "repeats", "success_rate"])
        for row in table:
            w.writerow([row.g, row.repeats, repr(row.success_rate)])
