import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from behavior_clust.dataset import Dataset, SpaceBounds, space_bounds, synthesize
from behavior_clust.errors import DataError
from behavior_clust.features import taat_matrix
from behavior_clust.network import ClassifierHyper
from behavior_clust.pipeline import PipelineConfig, is_last_cluster
from behavior_clust.pufilter import (PuConfig, PuEnsemble, SamplePools, generate_negatives,
                                     gaussian_kde, kde_threshold, local_minima, pu_iterate,
                                     silverman_bandwidth, train_classifier, train_ensemble,
                                     trajectory_prob, trajectory_probs)

from conftest import make_trajectory


class Const:
    def __init__(self, value):
        self.value = value

    def predict_proba(self, x):
        return np.full(len(x), self.value)


class FirstColumn:
    """Probability read from the first input column (the first state component)."""

    def predict_proba(self, x):
        return x[:, 0]


def _pools(rng, n_seed=50, n_unl=200):
    seed = (rng.normal(size=(n_seed, 2)), rng.normal(size=(n_seed, 1)))
    unl = (rng.normal(size=(n_unl, 2)) + 3, rng.normal(size=(n_unl, 1)) + 3)
    bounds = SpaceBounds(np.full(2, -5.0), np.full(2, 8.0), np.full(1, -5.0), np.full(1, 8.0))
    return seed, unl, bounds


# ---------------------------------------------------------------- negatives

def test_three_negatives_one_per_strategy():
    seed, unl, bounds = _pools(np.random.default_rng(0))
    s, a, strat = generate_negatives(seed, unl, bounds, 3)
    assert sorted(strat.tolist()) == [1, 2, 3]
    assert s.shape == (3, 2) and a.shape == (3, 1)


def test_three_hundred_split_and_no_collisions():
    seed, unl, bounds = _pools(np.random.default_rng(1))
    s, a, strat = generate_negatives(seed, unl, bounds, 300, rng_seed=2)
    assert np.bincount(strat).tolist() == [0, 100, 100, 100]
    seed_rows = {tuple(r) for r in np.hstack(seed)}
    assert not any(tuple(r) in seed_rows for r in np.hstack([s, a]))


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 400), st.integers(0, 2**32 - 1))
def test_strategy_split_even(n, seed):
    pools = _pools(np.random.default_rng(seed), n_seed=5, n_unl=5)
    _, _, strat = generate_negatives(*pools, n, rng_seed=seed)
    counts = np.bincount(strat, minlength=4)[1:]
    assert counts.sum() == n and counts.max() - counts.min() <= 1


def test_collisions_resampled_with_tiny_pools():
    # one seed pair and one unlabeled pair identical to it: strategy 1 can only
    # collide unless resampling gives up, which must be reported
    pair = (np.zeros((1, 2)), np.zeros((1, 1)))
    bounds = SpaceBounds(np.zeros(2), np.ones(2), np.zeros(1), np.ones(1))
    with pytest.raises(DataError):
        generate_negatives(pair, pair, bounds, 30)


def test_degenerate_bounds_and_single_pairs():
    one = (np.zeros((1, 2)), np.zeros((1, 1)))
    bounds = SpaceBounds(np.zeros(2), np.zeros(2), np.zeros(1), np.zeros(1))
    with pytest.raises(DataError):
        generate_negatives(one, one, bounds, 3)


def test_strategy3_states_uniform():
    seed, unl, bounds = _pools(np.random.default_rng(3))
    s, a, strat = generate_negatives(seed, unl, bounds, 30_000, rng_seed=4)
    s3 = s[strat == 3]
    assert len(s3) == 10_000
    for d in range(2):
        u = (s3[:, d] - bounds.state_lo[d]) / (bounds.state_hi[d] - bounds.state_lo[d])
        assert stats.kstest(u, "uniform").statistic < 0.05


def test_negatives_deterministic():
    pools = _pools(np.random.default_rng(5))
    a = generate_negatives(*pools, 60, rng_seed=7)
    b = generate_negatives(*pools, 60, rng_seed=7)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


# ---------------------------------------------------------------- training

def separable_pools(rng, n=300):
    return SamplePools(rng.normal(0, 0.5, size=(n, 2)), rng.normal(0, 0.5, size=(n, 1)),
                       rng.normal(10, 0.5, size=(n, 2)), rng.normal(10, 0.5, size=(n, 1)))


HYPER = ClassifierHyper(hidden=(8, 8), epochs=15, batch_size=32)


def accuracy(model, pools):
    x, y = pools.xy()
    p = model.predict_proba(x) if not isinstance(model, PuEnsemble) else \
        model.predict_proba(x[:, :2], x[:, 2:])
    return ((p > 0.5) == (y == 1)).mean()


def test_train_classifier_separable():
    rng = np.random.default_rng(6)
    model = train_classifier(separable_pools(rng), HYPER)
    assert accuracy(model, separable_pools(rng, 200)) >= 0.95


def test_single_member_is_bootstrap_classifier():
    from behavior_clust._runtime import derive_seed
    from behavior_clust.network import fit_classifier
    pools = separable_pools(np.random.default_rng(7), 60)
    ens = train_ensemble(pools, 1, HYPER)
    x, y = pools.xy()
    pos, neg = np.flatnonzero(y == 1), np.flatnonzero(y == 0)
    rng = np.random.default_rng(derive_seed(HYPER.rng_seed, 0, 1))
    pick = np.concatenate([rng.choice(pos, size=len(pos)), rng.choice(neg, size=len(neg))])
    hyper = ClassifierHyper(HYPER.hidden, HYPER.learning_rate, HYPER.epochs, HYPER.batch_size,
                            derive_seed(HYPER.rng_seed, 0, 2))
    ref, _ = fit_classifier(x[pick], y[pick], hyper)
    np.testing.assert_array_equal(ens.predict_proba(x[:, :2], x[:, 2:]), ref.predict_proba(x))


def test_ensemble_members_differ_and_accuracy():
    rng = np.random.default_rng(8)
    pools = separable_pools(rng)
    ens = train_ensemble(pools, 5, HYPER)
    assert len(ens.members) == 5
    for i in range(5):
        for j in range(i + 1, 5):
            assert not np.array_equal(ens.members[i].weights[0], ens.members[j].weights[0])
    test = separable_pools(rng, 200)
    best = max(accuracy(m, test) for m in ens.members)
    assert accuracy(ens, test) >= best - 0.02
    np.testing.assert_allclose(ens.member_weights, 0.2)


def test_ensemble_threads_identical():
    pools = separable_pools(np.random.default_rng(9), 80)
    a = train_ensemble(pools, 3, HYPER, threads=1)
    b = train_ensemble(pools, 3, HYPER, threads=3)
    x, _ = pools.xy()
    np.testing.assert_array_equal(a.predict_proba(x[:, :2], x[:, 2:]),
                                  b.predict_proba(x[:, :2], x[:, 2:]))


# ---------------------------------------------------------------- trajectory probability

def test_constant_members():
    ens = PuEnsemble([Const(0.7)] * 3, [1 / 3] * 3)
    t = make_trajectory("a", np.zeros((9, 1)))
    assert trajectory_prob(ens, t) == pytest.approx(0.7, abs=1e-15)


def test_two_transitions_mean():
    ens = PuEnsemble([FirstColumn()], [1.0])
    t = make_trajectory("a", np.zeros((2, 1)), states=[[0.2], [0.8]])
    assert trajectory_prob(ens, t) == pytest.approx(0.5, abs=1e-15)


def test_trajectory_prob_nested_loop_oracle():
    rng = np.random.default_rng(10)
    pools = separable_pools(rng, 40)
    ens = train_ensemble(pools, 3, ClassifierHyper(hidden=(4,), epochs=2))
    trajs = []
    for i in range(12):
        T = int(rng.integers(1, 9))
        trajs.append(make_trajectory(f"t{i}", rng.normal(size=(T, 1)) * 5,
                                     states=rng.normal(size=(T, 2)) * 5))
    batched = trajectory_probs(ens, trajs)
    for t, got in zip(trajs, batched):
        total = 0.0
        for k in range(len(t)):
            x = np.hstack([t.states[k], t.actions[k]])[None]
            total += sum(w * m.predict_proba(x)[0] for w, m in zip(ens.member_weights, ens.members))
        assert got == pytest.approx(total / len(t), rel=1e-12)
        assert trajectory_prob(ens, t) == pytest.approx(got, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trajectory_prob_order_invariant(seed):
    rng = np.random.default_rng(seed)
    ens = PuEnsemble([FirstColumn()], [1.0])
    states = rng.uniform(size=(7, 1))
    t = make_trajectory("a", np.zeros((7, 1)), states=states)
    u = make_trajectory("b", np.zeros((7, 1)), states=states[rng.permutation(7)])
    assert trajectory_prob(ens, t) == pytest.approx(trajectory_prob(ens, u), rel=1e-12)
    assert 0.0 <= trajectory_prob(ens, t) <= 1.0


# ---------------------------------------------------------------- KDE threshold

def bimodal(rng):
    return np.concatenate([rng.uniform(0.18, 0.22, 50), rng.uniform(0.78, 0.82, 50)])


def test_bimodal_threshold_between_modes():
    probs = bimodal(np.random.default_rng(11))
    res = kde_threshold(probs)
    assert 0.3 < res.threshold < 0.7
    # independent grid evaluation: exactly one interior minimum between the modes
    grid = np.linspace(0, 1, 512)
    h = 1.06 * np.std(probs, ddof=1) * len(probs) ** -0.2
    dens = np.array([np.mean(np.exp(-0.5 * ((x - probs) / h) ** 2)) / (h * np.sqrt(2 * np.pi))
                     for x in grid])
    np.testing.assert_allclose(res.density, dens, rtol=1e-10)
    inner = [i for i in range(1, 511) if dens[i] < dens[i - 1] and dens[i] < dens[i + 1]]
    assert len(inner) == 1 and grid[inner[0]] == res.threshold


def test_low_mode_count_matches():
    probs = bimodal(np.random.default_rng(12))
    res = kde_threshold(probs)
    assert res.low_mode_count == int((probs < res.threshold).sum()) == 50


def test_spike_has_no_threshold():
    res = kde_threshold(np.full(40, 0.9))
    assert res.threshold is None and res.low_mode_count == 0
    assert res.bandwidth == 1e-3


def test_needs_ten_probabilities():
    with pytest.raises(DataError):
        kde_threshold(np.full(9, 0.5))


def test_min_rules_differ():
    # three modes: the highest-x valley is shallower than the lower one
    rng = np.random.default_rng(13)
    probs = np.concatenate([rng.normal(0.1, 0.02, 200), rng.normal(0.5, 0.02, 30),
                            rng.normal(0.9, 0.02, 200)])
    a = kde_threshold(np.clip(probs, 0, 1), min_rule="max-x")
    b = kde_threshold(np.clip(probs, 0, 1), min_rule="max-density")
    mins = local_minima(a.density)
    assert a.threshold == a.grid[mins[-1]]
    assert b.threshold == a.grid[mins[np.argmax(a.density[mins])]]


def test_local_minima_plateau_middle():
    assert local_minima([3, 2, 1, 1, 1, 2, 3]).tolist() == [3]
    assert local_minima([3, 1, 1]).tolist() == []
    assert local_minima([1, 2, 1, 2, 0]).tolist() == [2]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_threshold_stable_under_duplication(seed):
    rng = np.random.default_rng(seed)
    probs = np.clip(np.concatenate([rng.normal(0.2, 0.05, 40), rng.normal(0.8, 0.05, 60)]), 0, 1)
    a = kde_threshold(probs)
    b = kde_threshold(np.concatenate([probs, probs]))
    if a.threshold is None or b.threshold is None:
        assert a.threshold == b.threshold
    else:
        # duplication shrinks Silverman's bandwidth by 2**-0.2, so allow a little drift
        assert abs(a.threshold - b.threshold) <= 0.05


def test_silverman_value():
    x = np.array([0.1, 0.2, 0.4, 0.8])
    assert silverman_bandwidth(x) == pytest.approx(1.06 * np.std(x, ddof=1) * 4 ** -0.2)


def test_kde_integrates_to_one():
    rng = np.random.default_rng(14)
    s = rng.uniform(0.3, 0.7, 100)
    grid = np.linspace(-1, 2, 4001)
    assert integrate.trapezoid(gaussian_kde(s, grid, 0.05), grid) == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------- membership loop

FAST = PuConfig(n_members=3, hyper=ClassifierHyper(hidden=(32, 32), epochs=20), max_rounds=6)


def test_pu_single_policy_keeps_everyone():
    ds = synthesize(n_policies=1, trajectories_per_policy=150, traj_len=30)
    res = pu_iterate(ds, np.arange(10), FAST)
    assert res.threshold.threshold is None
    assert is_last_cluster(res.threshold, len(ds), PipelineConfig())
    np.testing.assert_array_equal(res.members, np.arange(len(ds)))
    assert res.converged and res.rounds == 1


def test_pu_recovers_policy(small6):
    tm = taat_matrix(small6)
    labels = small6.labels
    zero = np.flatnonzero(labels == 0)
    centre = tm.rows[zero].mean(axis=0)
    seed = zero[np.argsort(np.linalg.norm(tm.rows[zero] - centre, axis=1))[:24]]
    res = pu_iterate(small6, seed, FAST)
    hits = (labels[res.members] == 0).sum()
    assert hits / len(res.members) >= 0.95
    assert hits / len(zero) >= 0.95
    assert res.converged
    last, prev = res.history[-1], res.history[-2]
    assert last["member_count"] == prev["member_count"]
    assert res.rounds <= FAST.max_rounds
    assert len(res.history[-1]["histogram"]) == 50


def test_pu_history_monotone_in_threshold(small6):
    res = pu_iterate(small6, np.arange(20), FAST)
    probs = res.threshold.trajectory_probs
    th = res.threshold.threshold
    if th is not None:
        lower = np.flatnonzero(probs > th - 0.05)
        assert set(res.members.tolist()) <= set(lower.tolist())


def test_pu_deterministic(small6):
    cfg = PuConfig(n_members=2, hyper=ClassifierHyper(hidden=(8,), epochs=3), max_rounds=2)
    a = pu_iterate(small6, np.arange(15), cfg)
    b = pu_iterate(small6, np.arange(15), cfg, threads=2)
    np.testing.assert_array_equal(a.members, b.members)
    np.testing.assert_array_equal(a.threshold.trajectory_probs, b.threshold.trajectory_probs)


def test_pu_empty_seed(small6):
    with pytest.raises(DataError):
        pu_iterate(small6, [], FAST)
