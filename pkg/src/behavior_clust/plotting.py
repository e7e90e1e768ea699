"""Static report figures (PNG), rendered headless next to the CSV/JSON outputs."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def figure(width=5.0, height=None, nrows=1, ncols=1):
    """Figure with golden-ratio panels; returns (fig, axes) with axes always a flat array."""
    if height is None:
        height = width * GOLDEN * nrows / ncols
    with plt.rc_context(RC):
        fig, axes = plt.subplots(nrows, ncols, figsize=(width, height), squeeze=False)
    return fig, axes.ravel()


def save(fig, path):
    # no Software/date metadata so reruns give identical files
    with plt.rc_context(RC):
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_percentile_ratio(curves, path):
    """Ratio vs percentile: per-pair curves in grey, their mean in black."""
    fig, (ax,) = figure()
    ratios = []
    for curve in curves.values():
        ax.plot(curve.percentiles, curve.ratios, color="0.8", lw=0.6)
        ratios.append(curve.ratios)
    pcts = next(iter(curves.values())).percentiles
    ax.plot(pcts, np.mean(ratios, axis=0), color="k", marker="o", ms=3, label="mean over pairs")
    ax.axhline(1.0, color="0.5", ls=":", lw=0.8)
    ax.set_xlabel("percentile p")
    ax.set_ylabel(r"$\delta_{same} / \delta_{diff}$")
    ax.legend(frameon=False)
    return save(fig, path)


def plot_wlln(curves, path):
    fig, (ax,) = figure()
    for label, curve in sorted(curves.items()):
        ax.plot(curve.lengths, curve.mean_distance, marker="o", ms=3, label=f"policy {label}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("trajectory length")
    ax.set_ylabel("mean distance to policy mean action")
    ax.legend(frameon=False, ncol=2)
    return save(fig, path)


def plot_elbow(curve, path):
    ks, sse = zip(*curve)
    fig, (ax,) = figure()
    ax.plot(ks, sse, color="k", marker="o", ms=3)
    ax.set_xlabel("k")
    ax.set_ylabel("SSE")
    return save(fig, path)


def plot_seed_purity(table, path):
    fig, (ax,) = figure()
    ax.plot([r.g for r in table], [r.success_rate for r in table], color="k", marker="o", ms=3)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("seed size g")
    ax.set_ylabel("single-label rate")
    return save(fig, path)


def plot_cluster_sizes(sizes, path, contingency=None):
    """Bar per cluster; stacked by true label when a (clusters x labels) table is given."""
    fig, (ax,) = figure()
    x = np.arange(len(sizes))
    if contingency is None:
        ax.bar(x, sizes, color="0.4")
    else:
        bottom = np.zeros(len(sizes))
        for j in range(contingency.shape[1]):
            ax.bar(x, contingency[:, j], bottom=bottom, label=f"label {j}")
            bottom += contingency[:, j]
        ax.legend(frameon=False, ncol=2)
    ax.set_xticks(x)
    ax.set_xlabel("cluster")
    ax.set_ylabel("trajectories")
    return save(fig, path)


def plot_thresholds(iterations, path):
    """Final-round trajectory probability histogram and threshold, one panel per cluster."""
    n = len(iterations)
    ncols = min(3, n)
    nrows = math.ceil(n / ncols)
    fig, axes = figure(width=3.0 * ncols, height=2.2 * nrows, nrows=nrows, ncols=ncols)
    for ax, it in zip(axes, iterations):
        counts = np.asarray(it["rounds_detail"][-1]["histogram"])
        edges = np.linspace(0.0, 1.0, len(counts) + 1)
        ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", color="0.6")
        if it["threshold"] is not None:
            ax.axvline(it["threshold"], color="k", ls="--", lw=0.8)
        ax.set_title(f"cluster {it['cluster_id']} ({it['member_count']} members)")
        ax.set_xlim(0.0, 1.0)
        ax.set_xlabel("trajectory probability")
    for ax in axes[n:]:
        ax.set_visible(False)
    return save(fig, path)


def plot_embedding(rows, labels, path, title=None):
    """Two leading principal components of ``rows`` coloured by ``labels``."""
    rows = np.asarray(rows, dtype=float)
    centred = rows - rows.mean(axis=0)
    if rows.shape[1] >= 2:
        _, _, vt = np.linalg.svd(centred, full_matrices=False)
        xy = centred @ vt[:2].T
    else:
        xy = np.column_stack([centred[:, 0], np.zeros(len(rows))])
    fig, (ax,) = figure()
    ax.scatter(xy[:, 0], xy[:, 1], c=np.asarray(labels), s=3, cmap="tab10", lw=0)
    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    if title:
        ax.set_title(title)
    return save(fig, path)
