import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from behavior_clust.dataset import synthesize
from behavior_clust.errors import DataError
from behavior_clust.metrics import ari, cluster_purity
from behavior_clust.network import ClassifierHyper
from behavior_clust.pipeline import (ClusterAssignment, PipelineConfig, cluster, is_last_cluster,
                                     read_assignment_csv, write_assignment_csv)
from behavior_clust.pufilter import PuConfig, ThresholdResult
from behavior_clust.seed import SeedConfig

FAST = PipelineConfig(seed=SeedConfig(z=100_000),
                      pu=PuConfig(n_members=3, hyper=ClassifierHyper(hidden=(32, 32), epochs=20)))


def threshold_result(threshold, low):
    return ThresholdResult(np.zeros(10), np.zeros(2), np.zeros(2), threshold, low, 0.1)


def test_last_when_no_threshold():
    assert is_last_cluster(threshold_result(None, 0), 3000, PipelineConfig())


def test_last_when_empty_low_mode():
    assert is_last_cluster(threshold_result(0.5, 0), 3000, PipelineConfig())


def test_not_last_forty_of_three_thousand():
    assert not is_last_cluster(threshold_result(0.5, 40), 3000, PipelineConfig())
    assert is_last_cluster(threshold_result(0.5, 29), 3000, PipelineConfig())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 5000), st.integers(1, 10_000), st.floats(0.001, 0.02))
def test_last_rule_arithmetic(low, total, frac):
    cfg = PipelineConfig(last_cluster_fraction=frac)
    assert is_last_cluster(threshold_result(0.5, low), total, cfg) == (low < frac * total)


@pytest.mark.parametrize("frac", [0.0005, 0.03])
def test_fraction_band(frac):
    with pytest.raises(ValueError):
        PipelineConfig(last_cluster_fraction=frac)


def test_config_round_trip():
    cfg = dataclasses.replace(FAST, last_cluster_fraction=0.005, taat_kind="geometric")
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg


def test_too_small_dataset():
    ds = synthesize(n_policies=1, trajectories_per_policy=8, traj_len=5)
    with pytest.raises(DataError):
        cluster(ds, FAST)


def test_assignment_csv_round_trip(tmp_path):
    f = tmp_path / "a.csv"
    write_assignment_csv(f, ["x", "y", "z"], np.array([0, 1, 0]))
    assert f.read_text().splitlines()[0] == "trajectory_id,cluster_id"
    assert read_assignment_csv(f) == {"x": 0, "y": 1, "z": 0}


def test_assignment_csv_bad_header(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("id,cluster\nx,0\n")
    with pytest.raises(DataError):
        read_assignment_csv(f)


@pytest.fixture(scope="module")
def small_result(small6):
    return cluster(small6, FAST)


def test_small_six_policies(small6, small_result):
    res = small_result
    assert res.n_clusters == 6
    assert ari(res.cluster_ids, small6.labels) >= 0.95
    assert cluster_purity(res.cluster_ids, small6.labels) >= 0.95


def test_assignment_invariants(small6, small_result):
    res = small_result
    assert res.trajectory_ids == small6.ids
    assert (res.cluster_ids >= 0).all()
    assert sorted(set(res.cluster_ids.tolist())) == list(range(res.n_clusters))
    assert res.sizes().sum() == len(small6)
    assert len(res.as_dict()) == len(small6)


def test_iteration_records(small6, small_result):
    its = small_result.iterations
    assert [it["cluster_id"] for it in its] == list(range(len(its)))
    assert its[-1]["is_last"] or its[-1].get("residual_merged") is not None
    assert not any(it["is_last"] for it in its[:-1])
    sizes = [it["working_set"] for it in its]
    assert sizes[0] == len(small6) and all(b < a for a, b in zip(sizes, sizes[1:]))


def test_single_policy_one_cluster():
    ds = synthesize(n_policies=1, trajectories_per_policy=200, traj_len=30)
    res = cluster(ds, FAST)
    assert res.n_clusters == 1
    last = res.iterations[-1]
    assert last["threshold"] is None or last["low_mode_count"] < 0.01 * len(ds)


def test_two_nearby_checkpoints():
    # expert and a weaker, nearby policy: same feedback weights, biases one unit apart
    ds = synthesize(n_policies=2, trajectories_per_policy=250, traj_len=40, separation=1.0,
                    shared_weights=True, state_separation=4.0)
    res = cluster(ds, FAST)
    assert res.n_clusters == 2
    assert ari(res.cluster_ids, ds.labels) >= 0.90


def test_cluster_deterministic_across_threads(small6, small_result):
    again = cluster(small6, FAST, threads=2)
    np.testing.assert_array_equal(again.cluster_ids, small_result.cluster_ids)
    assert again.iterations == small_result.iterations
