"""Positive-unlabelled filter: grow a seed set into every trajectory sharing its behavior."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._runtime import derive_seed, ordered_map
from .dataset import space_bounds
from .errors import DataError
from .network import ClassifierHyper, fit_classifier

log = logging.getLogger(__name__)

MIN_RULES = ("max-x", "max-density")
HIST_BINS = 50


@dataclass(frozen=True)
class SamplePools:
    """Positive and negative (state, action) pairs as paired arrays."""

    pos_states: np.ndarray
    pos_actions: np.ndarray
    neg_states: np.ndarray
    neg_actions: np.ndarray

    def __post_init__(self):
        if len(self.pos_states) != len(self.pos_actions) or len(self.neg_states) != len(self.neg_actions):
            raise DataError("state and action arrays of a pool differ in length")

    @property
    def n_pos(self):
        return len(self.pos_states)

    @property
    def n_neg(self):
        return len(self.neg_states)

    def xy(self):
        x = np.concatenate([np.hstack([self.pos_states, self.pos_actions]),
                            np.hstack([self.neg_states, self.neg_actions])])
        y = np.concatenate([np.ones(self.n_pos), np.zeros(self.n_neg)])
        return x, y


# ---------------------------------------------------------------- negatives

def _strategy_counts(n):
    base, extra = divmod(n, 3)
    return [base + (i < extra) for i in range(3)]


def _pair_keys(states, actions):
    rows = np.ascontiguousarray(np.hstack([states, actions]))
    return {r.tobytes() for r in rows}


def generate_negatives(seed_pairs, unlabeled_pairs, bounds, n, rng_seed=0, max_tries=20):
    """``n`` synthetic pairs unlike any seed pair, split evenly over three mixing strategies.

    1. seed state with unlabeled action, and unlabeled state with seed action;
    2. a state drawn uniformly within ``bounds`` with an observed action (seed or
       unlabeled), and vice versa;
    3. state and action both drawn uniformly within ``bounds``.

    Returns ``(states, actions, strategy)`` where ``strategy`` holds 1, 2 or 3 per row.
    """
    seed_s, seed_a = (np.asarray(p, dtype=float) for p in seed_pairs)
    unl_s, unl_a = (np.asarray(p, dtype=float) for p in unlabeled_pairs)
    if n < 3:
        raise ValueError("need n >= 3 negatives (one per strategy)")
    if len(seed_s) == 0 or len(unl_s) == 0:
        raise DataError("seed and unlabeled pools must be non-empty")
    degenerate_bounds = (np.all(bounds.state_hi == bounds.state_lo)
                         and np.all(bounds.action_hi == bounds.action_lo))
    if degenerate_bounds and len(seed_s) == 1 and len(unl_s) == 1:
        raise DataError("cannot generate negatives: bounds are a single point and pools hold one pair")

    rng = np.random.default_rng(rng_seed)
    obs_s = np.concatenate([seed_s, unl_s])
    obs_a = np.concatenate([seed_a, unl_a])
    counts = _strategy_counts(n)
    strategy = np.repeat([1, 2, 3], counts)

    def uniform_states(m):
        return rng.uniform(bounds.state_lo, bounds.state_hi, size=(m, len(bounds.state_lo)))

    def uniform_actions(m):
        return rng.uniform(bounds.action_lo, bounds.action_hi, size=(m, len(bounds.action_lo)))

    def draw(strat, m):
        # alternate the two directions inside strategies 1 and 2
        flip = np.arange(m) % 2 == 1
        s = np.empty((m, seed_s.shape[1]))
        a = np.empty((m, seed_a.shape[1]))
        k = int(flip.sum())
        if strat == 1:
            s[~flip] = seed_s[rng.integers(len(seed_s), size=m - k)]
            a[~flip] = unl_a[rng.integers(len(unl_a), size=m - k)]
            s[flip] = unl_s[rng.integers(len(unl_s), size=k)]
            a[flip] = seed_a[rng.integers(len(seed_a), size=k)]
        elif strat == 2:
            s[~flip] = uniform_states(m - k)
            a[~flip] = obs_a[rng.integers(len(obs_a), size=m - k)]
            s[flip] = obs_s[rng.integers(len(obs_s), size=k)]
            a[flip] = uniform_actions(k)
        else:
            s, a = uniform_states(m), uniform_actions(m)
        return s, a

    seed_keys = _pair_keys(seed_s, seed_a)
    states = np.empty((n, seed_s.shape[1]))
    actions = np.empty((n, seed_a.shape[1]))
    for strat, count in zip((1, 2, 3), counts):
        idx = np.flatnonzero(strategy == strat)
        todo = idx
        for _ in range(max_tries):
            if len(todo) == 0:
                break
            s, a = draw(strat, len(todo))
            states[todo], actions[todo] = s, a
            rows = np.ascontiguousarray(np.hstack([s, a]))
            clash = np.array([r.tobytes() in seed_keys for r in rows], dtype=bool)
            todo = todo[clash]
        if len(todo):
            raise DataError(f"strategy {strat}: could not avoid collisions with seed pairs")
    return states, actions, strategy


# ---------------------------------------------------------------- ensemble

@dataclass
class PuEnsemble:
    members: list
    member_weights: np.ndarray

    def __post_init__(self):
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        self.member_weights = np.asarray(self.member_weights, dtype=float)

    def predict_proba(self, states, actions):
        x = np.hstack([np.atleast_2d(states), np.atleast_2d(actions)])
        out = np.zeros(len(x))
        for w, m in zip(self.member_weights, self.members):
            out += w * m.predict_proba(x)
        return out


def train_classifier(pools, hyper, input_mean=None, input_scale=None):
    if pools.n_pos == 0 or pools.n_neg == 0:
        raise DataError("both pools must be non-empty")
    x, y = pools.xy()
    model, _ = fit_classifier(x, y, hyper, input_mean, input_scale)
    return model


def train_ensemble(pools, n_members, hyper, input_mean=None, input_scale=None, threads=1):
    """Bagging: each member fits an independent bootstrap of each pool; uniform weights."""
    if n_members < 1:
        raise ValueError("n_members must be >= 1")
    x_all, y_all = pools.xy()
    pos = np.flatnonzero(y_all == 1)
    neg = np.flatnonzero(y_all == 0)

    def fit_member(i):
        rng = np.random.default_rng(derive_seed(hyper.rng_seed, i, 1))
        pick = np.concatenate([rng.choice(pos, size=len(pos)), rng.choice(neg, size=len(neg))])
        member_hyper = ClassifierHyper(hyper.hidden, hyper.learning_rate, hyper.epochs,
                                       hyper.batch_size, derive_seed(hyper.rng_seed, i, 2))
        model, _ = fit_classifier(x_all[pick], y_all[pick], member_hyper, input_mean, input_scale)
        return model

    members = ordered_map(fit_member, range(n_members), threads)
    return PuEnsemble(members, np.full(n_members, 1.0 / n_members))


def trajectory_prob(ensemble, trajectory):
    """Mean ensemble probability over the trajectory's transitions."""
    return float(ensemble.predict_proba(trajectory.states, trajectory.actions).mean())


def trajectory_probs(ensemble, trajectories):
    """``trajectory_prob`` for many trajectories with one batched forward pass."""
    trajectories = list(trajectories)
    if not trajectories:
        return np.empty(0)
    states = np.concatenate([t.states for t in trajectories])
    actions = np.concatenate([t.actions for t in trajectories])
    p = ensemble.predict_proba(states, actions)
    lengths = np.array([len(t) for t in trajectories])
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    return np.add.reduceat(p, starts) / lengths


# ---------------------------------------------------------------- adaptive threshold

@dataclass(frozen=True)
class ThresholdResult:
    trajectory_probs: np.ndarray
    grid: np.ndarray
    density: np.ndarray
    threshold: float | None
    low_mode_count: int
    bandwidth: float

    def histogram(self, bins=HIST_BINS):
        counts, _ = np.histogram(self.trajectory_probs, bins=bins, range=(0.0, 1.0))
        return counts


def silverman_bandwidth(x, floor=1e-3):
    x = np.asarray(x, dtype=float)
    sd = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
    return max(1.06 * sd * len(x) ** (-0.2), floor)


def gaussian_kde(samples, grid, bandwidth):
    samples = np.asarray(samples, dtype=float)
    u = (np.asarray(grid)[:, None] - samples[None, :]) / bandwidth
    return np.exp(-0.5 * u * u).sum(axis=1) / (len(samples) * bandwidth * np.sqrt(2 * np.pi))


def local_minima(y):
    """Indices of interior local minima; a flat-bottomed minimum reports its middle."""
    y = np.asarray(y)
    out = []
    i, n = 1, len(y)
    while i < n - 1:
        if y[i] < y[i - 1]:
            j = i
            while j + 1 < n and y[j + 1] == y[i]:
                j += 1
            if j + 1 < n and y[j + 1] > y[i]:
                out.append((i + j) // 2)
            i = j + 1
        else:
            i += 1
    return np.array(out, dtype=int)


def kde_threshold(probs, grid_size=512, min_rule="max-x"):
    """Cut between the low and high probability modes at a KDE local minimum.

    ``min_rule="max-x"`` takes the minimum at the largest probability; ``"max-density"``
    the minimum with the highest density. No interior minimum gives ``threshold=None``.
    """
    if min_rule not in MIN_RULES:
        raise ValueError(f"min_rule must be one of {MIN_RULES}")
    probs = np.asarray(probs, dtype=float)
    if len(probs) < 10:
        raise DataError("kde_threshold needs at least 10 probabilities")
    grid = np.linspace(0.0, 1.0, grid_size)
    bw = silverman_bandwidth(probs)
    density = gaussian_kde(probs, grid, bw)
    minima = local_minima(density)
    if len(minima) == 0:
        return ThresholdResult(probs, grid, density, None, 0, bw)
    pick = minima[-1] if min_rule == "max-x" else minima[np.argmax(density[minima])]
    th = float(grid[pick])
    return ThresholdResult(probs, grid, density, th, int((probs < th).sum()), bw)


# ---------------------------------------------------------------- membership loop

@dataclass(frozen=True)
class PuConfig:
    n_members: int = 5
    hyper: ClassifierHyper = field(default_factory=ClassifierHyper)
    max_rounds: int = 10
    negatives_per_positive: float = 1.0
    max_positive_pairs: int = 10000
    grid_size: int = 512
    min_rule: str = "max-x"
    rng_seed: int = 0

    def __post_init__(self):
        if isinstance(self.hyper, dict):
            object.__setattr__(self, "hyper", ClassifierHyper(**self.hyper))
        if self.max_rounds < 1 or self.n_members < 1 or self.max_positive_pairs < 1:
            raise ValueError("max_rounds, n_members and max_positive_pairs must be positive")
        if self.negatives_per_positive <= 0:
            raise ValueError("negatives_per_positive must be positive")
        if self.min_rule not in MIN_RULES:
            raise ValueError(f"min_rule must be one of {MIN_RULES}")


@dataclass
class PuResult:
    members: np.ndarray
    threshold: ThresholdResult
    rounds: int
    converged: bool
    seed_retained: bool = False
    history: list = field(default_factory=list)


def _pairs_of(trajectories):
    return (np.concatenate([t.states for t in trajectories]),
            np.concatenate([t.actions for t in trajectories]))


def pu_iterate(dataset, initial_seed, config=None, threads=1):
    """Alternate classifier training and thresholded re-scoring until membership is stable.

    ``initial_seed`` holds trajectory indices into ``dataset``. Returns the final
    member indices, the last ThresholdResult and per-round diagnostics.
    """
    config = config or PuConfig()
    members = np.unique(np.asarray(getattr(initial_seed, "indices", initial_seed), dtype=int))
    if len(members) == 0:
        raise DataError("initial seed is empty")
    n = len(dataset)
    seed_size = len(members)
    bounds = space_bounds(dataset)
    all_s, all_a = dataset.all_states(), dataset.all_actions()
    x_all = np.hstack([all_s, all_a])
    in_mean, in_scale = x_all.mean(axis=0), x_all.std(axis=0)

    history = []
    result = None
    for r in range(config.max_rounds):
        rng = np.random.default_rng(derive_seed(config.rng_seed, r, 0))
        mask = np.zeros(n, dtype=bool)
        mask[members] = True
        pos_s, pos_a = _pairs_of([dataset[i] for i in members])
        if len(pos_s) > config.max_positive_pairs:
            keep = np.sort(rng.choice(len(pos_s), config.max_positive_pairs, replace=False))
            pos_s, pos_a = pos_s[keep], pos_a[keep]
        unl = np.flatnonzero(~mask)
        unl_pairs = _pairs_of([dataset[i] for i in unl]) if len(unl) else (all_s, all_a)
        n_neg = max(3, int(round(config.negatives_per_positive * len(pos_s))))
        neg_s, neg_a, _ = generate_negatives((pos_s, pos_a), unl_pairs, bounds, n_neg,
                                             derive_seed(config.rng_seed, r, 1))
        pools = SamplePools(pos_s, pos_a, neg_s, neg_a)
        hyper = ClassifierHyper(config.hyper.hidden, config.hyper.learning_rate,
                                config.hyper.epochs, config.hyper.batch_size,
                                derive_seed(config.rng_seed, r, 2))
        ensemble = train_ensemble(pools, config.n_members, hyper, in_mean, in_scale, threads)
        probs = trajectory_probs(ensemble, dataset)
        th = kde_threshold(probs, config.grid_size, config.min_rule)
        if th.threshold is None:
            new = np.arange(n)
        else:
            new = np.flatnonzero(probs > th.threshold)
        history.append({
            "round": r,
            "threshold": th.threshold,
            "member_count": int(len(new)),
            "low_mode_count": th.low_mode_count,
            "histogram": th.histogram().tolist(),
        })
        if len(new) < seed_size:
            log.warning("membership fell below the initial seed size (%d < %d); keeping the seed",
                        len(new), seed_size)
            return PuResult(np.unique(np.asarray(getattr(initial_seed, "indices", initial_seed))),
                            th, r + 1, False, True, history)
        # no second mode means a single behavior: everything joins and the loop ends
        converged = th.threshold is None or np.array_equal(new, members)
        members = new
        result = PuResult(members, th, r + 1, converged, False, history)
        if converged:
            break
    return result
