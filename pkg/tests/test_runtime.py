import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from behavior_clust._runtime import THREADS_ENV, derive_seed, ordered_map, resolve_threads


@settings(max_examples=30)
@given(st.lists(st.integers(0, 2**31), min_size=1, max_size=4))
def test_derive_seed_pure(keys):
    assert derive_seed(*keys) == derive_seed(*keys)
    assert 0 <= derive_seed(*keys) < 2**32


def test_derive_seed_distinct():
    assert len({derive_seed(0, i) for i in range(1000)}) == 1000


def test_resolve_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv(THREADS_ENV)
    assert resolve_threads(None) == 1


def test_resolve_threads_rejects_zero():
    with pytest.raises(ValueError):
        resolve_threads(0)


def test_ordered_map_keeps_order():
    items = list(range(50))
    assert ordered_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
