"""Iterative behavior-aware clustering driver."""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from ._runtime import derive_seed
from .errors import DataError
from .features import taat_matrix
from .network import ClassifierHyper
from .pufilter import PuConfig, pu_iterate
from .seed import SeedConfig, expand_seed, mcs_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    seed: SeedConfig = field(default_factory=SeedConfig)
    pu: PuConfig = field(default_factory=PuConfig)
    last_cluster_fraction: float = 0.01
    max_clusters: int = 20
    taat_kind: str = "arithmetic"
    taat_shift: float = 0.0

    def __post_init__(self):
        if isinstance(self.seed, dict):
            object.__setattr__(self, "seed", SeedConfig(**self.seed))
        if isinstance(self.pu, dict):
            object.__setattr__(self, "pu", PuConfig(**self.pu))
        if not 0.001 <= self.last_cluster_fraction <= 0.02:
            raise ValueError("last_cluster_fraction must lie in [0.001, 0.02]")
        if self.max_clusters < 1:
            raise ValueError("max_clusters must be positive")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        pu = dict(d.get("pu", {}))
        if "hyper" in pu:
            pu["hyper"] = ClassifierHyper(**pu["hyper"])
        d["pu"] = PuConfig(**pu)
        d["seed"] = SeedConfig(**d.get("seed", {}))
        return cls(**d)


@dataclass
class ClusterAssignment:
    """Cluster id per trajectory (dataset order); ids follow extraction order from 0."""

    trajectory_ids: list
    cluster_ids: np.ndarray
    iterations: list = field(default_factory=list)

    @property
    def n_clusters(self):
        return int(self.cluster_ids.max()) + 1 if len(self.cluster_ids) else 0

    def sizes(self):
        return np.bincount(self.cluster_ids, minlength=self.n_clusters)

    def as_dict(self):
        return dict(zip(self.trajectory_ids, self.cluster_ids.tolist()))

    def to_csv(self, path):
        write_assignment_csv(path, self.trajectory_ids, self.cluster_ids)


def write_assignment_csv(path, trajectory_ids, cluster_ids):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory_id", "cluster_id"])
        for tid, cid in zip(trajectory_ids, cluster_ids):
            w.writerow([tid, int(cid)])


def read_assignment_csv(path):
    """``{trajectory_id: int}`` from a two-column CSV (second column: cluster_id or label)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[0] != "trajectory_id":
            raise DataError(f"{path}: expected header 'trajectory_id,<cluster_id|label>'")
        out = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[row[0]] = int(row[1])
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}: line {lineno}: bad row {row!r}") from exc
    return out


def is_last_cluster(threshold_result, total, config):
    """True when no low-probability mode exists or it holds fewer than
    ``config.last_cluster_fraction * total`` trajectories."""
    if threshold_result.threshold is None:
        return True
    return threshold_result.low_mode_count < config.last_cluster_fraction * total


def cluster(dataset, config=None, threads=1):
    """Peel off one single-behavior cluster per iteration until the last one is detected."""
    config = config or PipelineConfig()
    n = len(dataset)
    g = config.seed.g
    if n < 2 * g:
        raise DataError(f"need at least 2*g = {2 * g} trajectories, got {n}")
    tm = taat_matrix(dataset, config.taat_kind, config.taat_shift)
    g2_target = max(g, config.seed.g2(n))

    cluster_ids = np.full(n, -1, dtype=int)
    remaining = np.arange(n)
    iterations = []
    cid = 0
    while True:
        if cid >= config.max_clusters:
            log.warning("max_clusters=%d reached; %d residual trajectories join the last cluster",
                        config.max_clusters, len(remaining))
            break
        if len(remaining) < 2 * g:
            break
        seed_cfg = dataclasses.replace(config.seed, rng_seed=derive_seed(config.seed.rng_seed, cid))
        sub_taat = tm.take(remaining)
        seed = mcs_seed(sub_taat, seed_cfg, threads=threads)
        seed = expand_seed(sub_taat, seed, seed_cfg, g2=min(g2_target, len(remaining)))
        pu_cfg = dataclasses.replace(config.pu, rng_seed=derive_seed(config.pu.rng_seed, cid))
        sub = dataset.subset(remaining)
        result = pu_iterate(sub, seed.indices, pu_cfg, threads=threads)
        # the low-mode count is judged against the whole dataset, not the working set
        last = is_last_cluster(result.threshold, n, config)
        cluster_ids[remaining[result.members]] = cid
        iterations.append({
            "cluster_id": cid,
            "working_set": int(len(remaining)),
            "seed_size": int(len(seed)),
            "rounds": result.rounds,
            "converged": result.converged,
            "seed_retained": result.seed_retained,
            "member_count": int(len(result.members)),
            "threshold": result.threshold.threshold,
            "low_mode_count": result.threshold.low_mode_count,
            "is_last": bool(last),
            "rounds_detail": result.history,
        })
        log.info("cluster %d: %d members from %d remaining (threshold=%s)",
                 cid, len(result.members), len(remaining), result.threshold.threshold)
        remaining = remaining[cluster_ids[remaining] < 0]
        cid += 1
        if last or len(remaining) == 0:
            break

    if len(remaining):
        cluster_ids[remaining] = max(cid - 1, 0)
        if iterations:
            iterations[-1]["residual_merged"] = int(len(remaining))
    return ClusterAssignment(list(dataset.ids), cluster_ids, iterations)
