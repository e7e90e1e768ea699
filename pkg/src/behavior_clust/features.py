"""Trajectory-level action features and the distance analytics built on them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from . import metrics
from .errors import DataError, DegenerateInputError

KINDS = ("arithmetic", "geometric")


@dataclass(frozen=True)
class TaatMatrix:
    """One temporal-averaged action vector per trajectory, in dataset order."""

    rows: np.ndarray
    trajectory_ids: tuple
    kind: str = "arithmetic"

    def __post_init__(self):
        if len(self.rows) != len(self.trajectory_ids):
            raise ValueError("row count must equal id count")

    def __len__(self):
        return len(self.rows)

    def take(self, indices):
        indices = np.asarray(indices, dtype=int)
        return TaatMatrix(self.rows[indices], tuple(self.trajectory_ids[i] for i in indices), self.kind)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["trajectory_id"] + [f"a{i}" for i in range(self.rows.shape[1])])
            for tid, row in zip(self.trajectory_ids, self.rows):
                w.writerow([tid] + [repr(float(v)) for v in row])


def taat(trajectory):
    """Arithmetic mean of the trajectory's action vectors."""
    actions = trajectory.actions if hasattr(trajectory, "actions") else np.asarray(trajectory, float)
    if len(actions) == 0:
        raise DataError("TAAT of an empty trajectory")
    return actions.mean(axis=0)


def taat_geometric(trajectory, shift=0.0):
    """Per-component geometric mean of ``a + shift``, shifted back by ``shift``.

    The shift makes the log defined for actions that can be zero or negative.
    """
    actions = trajectory.actions if hasattr(trajectory, "actions") else np.asarray(trajectory, float)
    if len(actions) == 0:
        raise DataError("TAAT of an empty trajectory")
    if shift < 0:
        raise ValueError("shift must be non-negative")
    shifted = actions + shift
    if (shifted <= 0).any():
        raise DataError(f"geometric TAAT needs a + shift > 0; minimum is {shifted.min():.6g}")
    return np.exp(np.log(shifted).mean(axis=0)) - shift


def taat_matrix(dataset, kind="arithmetic", shift=0.0):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if len(dataset) == 0:
        raise DataError("TAAT matrix of an empty dataset")
    if kind == "arithmetic":
        rows = np.stack([taat(t) for t in dataset])
    else:
        rows = np.stack([taat_geometric(t, shift) for t in dataset])
    return TaatMatrix(rows, tuple(dataset.ids), kind)


# ---------------------------------------------------------------- percentile distance ratio

@dataclass(frozen=True)
class PercentileRatioCurve:
    percentiles: tuple
    ratios: tuple
    delta_same: tuple = ()
    delta_diff: tuple = ()


def lowest_fraction_mean(distances, percentile):
    """Mean of the smallest ``max(1, floor(p% * count))`` entries."""
    distances = np.asarray(distances, dtype=float).ravel()
    k = max(1, math.floor(percentile / 100.0 * len(distances)))
    if k >= len(distances):
        return float(distances.mean())
    return float(np.partition(distances, k - 1)[:k].mean())


def percentile_ratio(actions_a, actions_b, percentiles=(5, 10, 20, 40, 60, 80, 100)):
    """delta_same / delta_diff per percentile: low-tail mean distances within set a vs across a, b."""
    a = np.atleast_2d(np.asarray(actions_a, dtype=float))
    b = np.atleast_2d(np.asarray(actions_b, dtype=float))
    if len(a) < 2 or len(b) < 2:
        raise DataError("each action set needs at least 2 vectors")
    for p in percentiles:
        if not 0 < p <= 100:
            raise ValueError(f"percentile {p} outside (0, 100]")
    within = pdist(a)
    cross = cdist(a, b).ravel()
    same, diff, ratios = [], [], []
    for p in percentiles:
        ds, dd = lowest_fraction_mean(within, p), lowest_fraction_mean(cross, p)
        if dd == 0:
            raise DegenerateInputError(f"cross-set distances vanish at percentile {p}")
        same.append(ds)
        diff.append(dd)
        ratios.append(ds / dd)
    return PercentileRatioCurve(tuple(percentiles), tuple(ratios), tuple(same), tuple(diff))


def sample_actions(dataset, n, rng_seed=0):
    """``n`` transitions' actions drawn without replacement, with their trajectory labels."""
    actions = dataset.all_actions()
    lengths = dataset.lengths
    labels = dataset.labels
    rng = np.random.default_rng(rng_seed)
    idx = np.sort(rng.choice(len(actions), size=min(n, len(actions)), replace=False))
    per_transition = None if labels is None else np.repeat(labels, lengths)[idx]
    return actions[idx], per_transition


def action_sets_by_label(dataset, n_per_label=5000, rng_seed=0):
    """Per ground-truth label, up to ``n_per_label`` actions sampled without replacement."""
    labels = dataset.labels
    if labels is None:
        raise DataError("per-label action sets need ground-truth labels")
    rng = np.random.default_rng(rng_seed)
    out = {}
    for lab in np.unique(labels):
        acts = np.concatenate([dataset[i].actions for i in np.flatnonzero(labels == lab)])
        pick = rng.choice(len(acts), size=min(n_per_label, len(acts)), replace=False)
        out[int(lab)] = acts[np.sort(pick)]
    return out


def pairwise_percentile_ratios(action_sets, percentiles):
    """percentile_ratio over every ordered pair of distinct groups: {(q, p): curve}."""
    keys = sorted(action_sets)
    return {
        (q, p): percentile_ratio(action_sets[q], action_sets[p], percentiles)
        for q in keys for p in keys if q != p
    }


# ---------------------------------------------------------------- convergence with length

@dataclass(frozen=True)
class WllnCurve:
    lengths: tuple
    mean_distance: tuple
    reference_mean: np.ndarray


def wlln_curve(dataset, lengths):
    """Per label: mean distance between prefix-truncated TAATs and the group's mean action."""
    labels = dataset.labels
    if labels is None:
        raise DataError("wlln_curve needs ground-truth labels")
    lengths = [int(L) for L in lengths]
    shortest = int(dataset.lengths.min())
    if any(L < 1 or L > shortest for L in lengths):
        raise DataError(f"requested lengths must lie in [1, {shortest}]")
    curves = {}
    for lab in np.unique(labels):
        members = [dataset[i] for i in np.flatnonzero(labels == lab)]
        mu = np.concatenate([t.actions for t in members]).mean(axis=0)
        dist = []
        for L in lengths:
            prefix_means = np.stack([t.actions[:L].mean(axis=0) for t in members])
            dist.append(float(np.linalg.norm(prefix_means - mu, axis=1).mean()))
        curves[int(lab)] = WllnCurve(tuple(lengths), tuple(dist), mu)
    return curves


def clustering_trend_metrics(matrix, labels):
    """Silhouette, Calinski-Harabasz and Davies-Bouldin of ``matrix`` under ``labels``."""
    x = matrix.rows if isinstance(matrix, TaatMatrix) else np.asarray(matrix, dtype=float)
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise DegenerateInputError("trend metrics need at least two label groups")
    return {
        "silhouette": metrics.silhouette(x, labels),
        "calinski_harabasz": metrics.calinski_harabasz(x, labels),
        "davies_bouldin": metrics.davies_bouldin(x, labels),
    }
