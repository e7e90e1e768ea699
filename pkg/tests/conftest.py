import numpy as np
import pytest

from behavior_clust.dataset import Dataset, Trajectory, synthesize


def make_trajectory(tid, actions, states=None, label=None):
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    T = len(actions)
    if states is None:
        states = np.zeros((T, 1))
    terminals = np.zeros(T, dtype=bool)
    terminals[-1] = True
    return Trajectory(tid, states, actions, -np.sum(actions ** 2, axis=1), terminals, label)


def random_dataset(rng, n=5, state_dim=3, action_dim=2, max_len=12, labels=True):
    trajs = []
    for i in range(n):
        T = int(rng.integers(1, max_len + 1))
        trajs.append(make_trajectory(
            f"t{i}", rng.normal(size=(T, action_dim)), rng.normal(size=(T, state_dim)),
            int(rng.integers(0, 3)) if labels else None))
    return Dataset(state_dim, action_dim, trajs)


@pytest.fixture(scope="session")
def standard():
    """6 policies x 500 trajectories x length 50, seed 7."""
    return synthesize()


@pytest.fixture(scope="session")
def small6():
    """Quicker 6-policy set for unit tests of the clustering stages."""
    return synthesize(trajectories_per_policy=100, traj_len=30)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
