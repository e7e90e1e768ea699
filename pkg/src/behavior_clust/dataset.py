"""Trajectory data model, trajset-v1 JSONL I/O, synthetic data and perturbations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import solve_discrete_lyapunov
from scipy.spatial.distance import pdist

from .errors import DataError

SCHEMA = "trajset-v1"


class Transition(NamedTuple):
    state: np.ndarray
    action: np.ndarray
    reward: float
    terminal: bool


def _frozen(arr, dtype, ndim, name):
    arr = np.array(arr, dtype=dtype, copy=True)
    if arr.ndim != ndim:
        raise DataError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One episode. Arrays are stored row-per-timestep and are read-only."""

    id: str
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    terminals: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "states", _frozen(self.states, float, 2, "states"))
        set_(self, "actions", _frozen(self.actions, float, 2, "actions"))
        set_(self, "rewards", _frozen(self.rewards, float, 1, "rewards"))
        set_(self, "terminals", _frozen(self.terminals, bool, 1, "terminals"))
        n = len(self.states)
        if n == 0:
            raise DataError(f"trajectory {self.id!r} is empty")
        if not (len(self.actions) == len(self.rewards) == len(self.terminals) == n):
            raise DataError(f"trajectory {self.id!r}: states/actions/rewards/terminals lengths differ")
        if self.terminals[:-1].any():
            raise DataError(f"trajectory {self.id!r}: terminal flag set before the final transition")
        for name in ("states", "actions", "rewards"):
            if not np.isfinite(getattr(self, name)).all():
                raise DataError(f"trajectory {self.id!r}: non-finite value in {name}")
        if self.label is not None:
            if int(self.label) != self.label or self.label < 0:
                raise DataError(f"trajectory {self.id!r}: label must be a non-negative int")
            set_(self, "label", int(self.label))

    def __len__(self):
        return len(self.states)

    @property
    def transitions(self):
        return [
            Transition(s, a, float(r), bool(o))
            for s, a, r, o in zip(self.states, self.actions, self.rewards, self.terminals)
        ]

    def replace(self, **changes):
        fields = dict(id=self.id, states=self.states, actions=self.actions,
                      rewards=self.rewards, terminals=self.terminals, label=self.label)
        fields.update(changes)
        return Trajectory(**fields)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and all(np.array_equal(getattr(self, k), getattr(other, k))
                    for k in ("states", "actions", "rewards", "terminals"))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    state_dim: int
    action_dim: int
    trajectories: tuple = ()

    def __post_init__(self):
        if int(self.state_dim) < 1 or int(self.action_dim) < 1:
            raise DataError("state_dim and action_dim must be positive")
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        seen = set()
        for traj in self.trajectories:
            if traj.states.shape[1] != self.state_dim:
                raise DataError(f"trajectory {traj.id!r}: state_dim mismatch "
                                f"({traj.states.shape[1]} != {self.state_dim})")
            if traj.actions.shape[1] != self.action_dim:
                raise DataError(f"trajectory {traj.id!r}: action_dim mismatch "
                                f"({traj.actions.shape[1]} != {self.action_dim})")
            if traj.id in seen:
                raise DataError(f"duplicate trajectory id {traj.id!r}")
            seen.add(traj.id)

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __getitem__(self, i):
        return self.trajectories[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.state_dim == other.state_dim and self.action_dim == other.action_dim
                and self.trajectories == other.trajectories)

    __hash__ = None

    @property
    def ids(self):
        return [t.id for t in self.trajectories]

    @property
    def labels(self):
        """Ground-truth labels as an int array, or None if any trajectory lacks one."""
        if not self.trajectories or any(t.label is None for t in self.trajectories):
            return None
        return np.array([t.label for t in self.trajectories], dtype=int)

    @property
    def lengths(self):
        return np.array([len(t) for t in self.trajectories], dtype=int)

    def subset(self, indices):
        return Dataset(self.state_dim, self.action_dim,
                       [self.trajectories[i] for i in indices])

    def all_states(self):
        if not self.trajectories:
            return np.empty((0, self.state_dim))
        return np.concatenate([t.states for t in self.trajectories])

    def all_actions(self):
        if not self.trajectories:
            return np.empty((0, self.action_dim))
        return np.concatenate([t.actions for t in self.trajectories])


# ---------------------------------------------------------------- JSONL I/O

def _trajectory_record(traj):
    return {
        "id": traj.id,
        "states": traj.states.tolist(),
        "actions": traj.actions.tolist(),
        "rewards": traj.rewards.tolist(),
        "terminals": traj.terminals.tolist(),
        "label": traj.label,
    }


def save_jsonl(dataset, path):
    """Write ``dataset`` in trajset-v1 format (metadata line + one line per trajectory)."""
    header = {"schema": SCHEMA, "state_dim": dataset.state_dim, "action_dim": dataset.action_dim}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for traj in dataset.trajectories:
            fh.write(json.dumps(_trajectory_record(traj)) + "\n")


def _parse_trajectory(rec, lineno, state_dim, action_dim):
    if not isinstance(rec, dict):
        raise DataError(f"line {lineno}: expected a JSON object")
    missing = {"id", "states", "actions", "rewards", "terminals"} - rec.keys()
    if missing:
        raise DataError(f"line {lineno}: missing field(s) {sorted(missing)}")
    try:
        states = np.asarray(rec["states"], dtype=float)
        actions = np.asarray(rec["actions"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise DataError(f"line {lineno}: ragged or non-numeric states/actions") from exc
    if states.ndim != 2 or states.shape[1] != state_dim:
        raise DataError(f"line {lineno}: state_dim mismatch (expected {state_dim} components)")
    if actions.ndim != 2 or actions.shape[1] != action_dim:
        raise DataError(f"line {lineno}: action_dim mismatch (expected {action_dim} components)")
    try:
        return Trajectory(str(rec["id"]), states, actions, rec["rewards"], rec["terminals"],
                          rec.get("label"))
    except (DataError, TypeError, ValueError) as exc:
        raise DataError(f"line {lineno}: {exc}") from exc


def load_jsonl(path):
    """Parse a trajset-v1 file. Errors name the offending 1-based line number."""
    trajectories = []
    seen = set()
    state_dim = action_dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if state_dim is None:
                if not isinstance(rec, dict) or rec.get("schema") != SCHEMA:
                    raise DataError(f"line {lineno}: expected metadata record with schema {SCHEMA!r}")
                try:
                    state_dim, action_dim = int(rec["state_dim"]), int(rec["action_dim"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise DataError(f"line {lineno}: metadata needs integer state_dim/action_dim") from exc
                continue
            traj = _parse_trajectory(rec, lineno, state_dim, action_dim)
            if traj.id in seen:
                raise DataError(f"line {lineno}: duplicate trajectory id {traj.id!r}")
            seen.add(traj.id)
            trajectories.append(traj)
    if state_dim is None:
        raise DataError("file is empty; expected a metadata record on line 1")
    return Dataset(state_dim, action_dim, trajectories)


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class SpaceBounds:
    state_lo: np.ndarray
    state_hi: np.ndarray
    action_lo: np.ndarray
    action_hi: np.ndarray

    @property
    def state_extent(self):
        return self.state_hi - self.state_lo

    @property
    def action_extent(self):
        return self.action_hi - self.action_lo


def space_bounds(dataset):
    """Per-dimension min/max of states and actions over every transition."""
    if len(dataset) == 0:
        raise DataError("space_bounds of an empty dataset")
    s, a = dataset.all_states(), dataset.all_actions()
    return SpaceBounds(s.min(axis=0), s.max(axis=0), a.min(axis=0), a.max(axis=0))


# ---------------------------------------------------------------- synthetic data

FEATURES = ("tanh", "identity")


@dataclass(frozen=True)
class SynthConfig:
    n_policies: int = 6
    trajectories_per_policy: int = 500
    traj_len: int = 50
    state_dim: int = 8
    action_dim: int = 4
    separation: float = 2.0
    action_noise_std: float = 0.1
    rng_seed: int = 7
    features: str = "tanh"
    # raw = bias + gain * signed_power(W @ features(s), power) + noise;
    # action = bound * tanh(raw / bound), or raw when action_bound is None
    action_gain: float = 2.0
    action_power: float = 3.0
    action_bound: Optional[float] = 5.0
    shared_weights: bool = False
    # each policy operates around its own home state; min home distance in
    # units of the stationary state std (0 = all policies share one region)
    state_separation: float = 16.0

    def __post_init__(self):
        for name in ("n_policies", "trajectories_per_policy", "traj_len", "state_dim", "action_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if min(self.separation, self.action_noise_std, self.action_gain, self.state_separation) < 0:
            raise ValueError("separation, action_noise_std, action_gain and state_separation "
                             "must be non-negative")
        if self.action_power <= 0:
            raise ValueError("action_power must be positive")
        if self.action_bound is not None and self.action_bound <= 0:
            raise ValueError("action_bound must be positive or None")
        if self.features not in FEATURES:
            raise ValueError(f"features must be one of {FEATURES}")


@dataclass(frozen=True)
class BehaviorPolicy:
    """Stationary stochastic policy: a = squash(bias + gain * sgnpow(W f(s - home), power) + N(0, noise^2)).

    ``squash`` is ``bound * tanh(x / bound)``, keeping actions inside a box as
    continuous-control tasks do; ``bound=None`` leaves them unbounded.
    ``home`` is the state the policy regulates around (zero when None).
    """

    policy_id: int
    weights: np.ndarray
    bias: np.ndarray
    action_noise_std: float
    features: str = "tanh"
    gain: float = 1.0
    power: float = 3.0
    bound: Optional[float] = None
    home: Optional[np.ndarray] = None

    def _raw_mean(self, states):
        states = np.atleast_2d(states)
        if self.home is not None:
            states = states - self.home
        feats = np.tanh(states) if self.features == "tanh" else states
        u = feats @ self.weights.T
        return self.bias + self.gain * np.sign(u) * np.abs(u) ** self.power

    def _squash(self, x):
        return x if self.bound is None else self.bound * np.tanh(x / self.bound)

    def expected_action(self, states, n_mc=0, rng=None):
        """E[a | s]. Exact when noise is zero or actions are unbounded, else Monte-Carlo."""
        raw = self._raw_mean(states)
        if self.bound is None or self.action_noise_std == 0 or n_mc == 0:
            return self._squash(raw)
        rng = rng if rng is not None else np.random.default_rng(0)
        eps = rng.normal(scale=self.action_noise_std, size=(n_mc,) + raw.shape)
        return self._squash(raw + eps).mean(axis=0)

    def act(self, states, rng):
        raw = self._raw_mean(states)
        return self._squash(raw + rng.normal(scale=self.action_noise_std, size=raw.shape))


def _place_biases(n, dim, separation, rng, candidates=200):
    """Bias vectors whose minimum mutual distance equals ``separation``.

    Keeps the most evenly spread of ``candidates`` random layouts in the unit cube.
    """
    if n == 1 or separation == 0:
        return np.zeros((n, dim))
    best, best_ratio = None, -1.0
    for _ in range(candidates):
        pts = rng.uniform(-1.0, 1.0, size=(n, dim))
        d = pdist(pts)
        ratio = d.min() / d.max()
        if ratio > best_ratio:
            best, best_ratio = pts, ratio
    best = best - best.mean(axis=0)
    return best * (separation / pdist(best).min())


def make_environment(config, rng):
    """Stable linear dynamics (A, B) and the stationary per-dimension state scale.

    A has negative real eigenvalues in [-0.9, -0.6]: states swing around zero
    from step to step, so per-step actions vary widely while their trajectory
    average settles quickly.
    """
    d = config.state_dim
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    a_mat = q @ np.diag(rng.uniform(-0.9, -0.6, size=d)) @ q.T
    b_mat = rng.normal(scale=1e-3, size=(d, config.action_dim))
    stationary = solve_discrete_lyapunov(a_mat, 0.01 * np.eye(d))
    scale = float(np.sqrt(np.mean(np.diag(stationary))))
    return a_mat, b_mat, scale


def make_policies(config, rng, state_scale):
    """Policies with spread-out biases; homes come from a separate stream so that
    ``state_separation`` leaves every other draw unchanged."""
    biases = _place_biases(config.n_policies, config.action_dim, config.separation, rng)
    home_rng = np.random.default_rng([config.rng_seed, 1])
    homes = _place_biases(config.n_policies, config.state_dim,
                          config.state_separation * state_scale, home_rng)
    ad, sd = config.action_dim, config.state_dim

    def draw_weights():
        # orthonormal rows (or columns when ad > sd) give every policy the same action spread
        q, _ = np.linalg.qr(rng.normal(size=(max(ad, sd), min(ad, sd))))
        w = q.T if ad <= sd else q
        return w / state_scale

    shared = draw_weights() if config.shared_weights else None
    return [
        BehaviorPolicy(p, shared if shared is not None else draw_weights(), biases[p],
                       config.action_noise_std, config.features, config.action_gain,
                       config.action_power, config.action_bound, homes[p])
        for p in range(config.n_policies)
    ]


def synthesize(config=None, **overrides):
    """Labeled multi-behavior dataset; deterministic given ``config.rng_seed``."""
    if config is None:
        config = SynthConfig(**overrides)
    elif overrides:
        config = SynthConfig(**{**config.__dict__, **overrides})
    rng = np.random.default_rng(config.rng_seed)
    a_mat, b_mat, scale = make_environment(config, rng)
    policies = make_policies(config, rng, scale)
    n, T = config.trajectories_per_policy, config.traj_len

    trajectories = []
    for policy in policies:
        states = np.empty((n, T, config.state_dim))
        actions = np.empty((n, T, config.action_dim))
        # x is the deviation from the policy's home state
        x = rng.normal(scale=scale, size=(n, config.state_dim))
        for t in range(T):
            s = policy.home + x
            a = policy.act(s, rng)
            states[:, t], actions[:, t] = s, a
            x = x @ a_mat.T + a @ b_mat.T + rng.normal(scale=0.1, size=x.shape)
        terminals = np.zeros(T, dtype=bool)
        terminals[-1] = True
        for i in range(n):
            trajectories.append(Trajectory(
                f"p{policy.policy_id}-{i:05d}", states[i], actions[i],
                -np.sum(actions[i] ** 2, axis=1), terminals, policy.policy_id))
    order = rng.permutation(len(trajectories))
    return Dataset(config.state_dim, config.action_dim, [trajectories[i] for i in order])


# ---------------------------------------------------------------- perturbations

@dataclass(frozen=True)
class PerturbSpec:
    mode: str
    imbalance_ratios: Sequence[int] = ()
    noise_fraction_uniform: float = 0.5
    noise_scale_range: tuple = (0.05, 0.20)

    def __post_init__(self):
        if self.mode not in ("imbalance", "noise"):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        lo, hi = self.noise_scale_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("noise_scale_range must satisfy 0 <= lo <= hi <= 1")
        if not 0.0 <= self.noise_fraction_uniform <= 1.0:
            raise ValueError("noise_fraction_uniform must lie in [0, 1]")
        if self.mode == "imbalance" and any(int(r) < 1 for r in self.imbalance_ratios):
            raise ValueError("imbalance ratios must be positive integers")


def perturb(dataset, spec, rng_seed=0):
    rng = np.random.default_rng(rng_seed)
    if spec.mode == "imbalance":
        return _imbalance(dataset, spec.imbalance_ratios, rng)
    return _add_noise(dataset, spec, rng)


def _imbalance(dataset, ratios, rng):
    labels = dataset.labels
    if labels is None:
        raise DataError("imbalance perturbation needs ground-truth labels")
    groups = np.unique(labels)
    if len(ratios) != len(groups):
        raise DataError(f"{len(ratios)} ratios given for {len(groups)} label groups")
    largest = max(int((labels == g).sum()) for g in groups)
    top = max(ratios)
    keep = np.zeros(len(dataset), dtype=bool)
    for g, r in zip(groups, ratios):
        members = np.flatnonzero(labels == g)
        k = min(len(members), math.floor(largest * r / top))
        keep[rng.permutation(members)[:k]] = True
    return dataset.subset(np.flatnonzero(keep))


def _add_noise(dataset, spec, rng):
    bounds = space_bounds(dataset)
    lo, hi = spec.noise_scale_range
    n = len(dataset)
    uniform = np.zeros(n, dtype=bool)
    uniform[rng.permutation(n)[: round(spec.noise_fraction_uniform * n)]] = True
    out = []
    for traj, is_uniform in zip(dataset.trajectories, uniform):
        frac = rng.uniform(lo, hi)
        noisy = {}
        for name, extent in (("states", bounds.state_extent), ("actions", bounds.action_extent)):
            x = getattr(traj, name)
            if is_uniform:
                half = 0.5 * frac * extent
                delta = rng.uniform(-1.0, 1.0, size=x.shape) * half
            else:
                delta = rng.normal(size=x.shape) * (frac * extent)
            noisy[name] = x + delta
        out.append(traj.replace(**noisy))
    return Dataset(dataset.state_dim, dataset.action_dim, out)
