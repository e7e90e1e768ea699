"""Seed derivation and thread-count plumbing."""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "BEHAVIOR_CLUST_THREADS"


def derive_seed(*keys):
    """Deterministic 32-bit seed from a tuple of non-negative ints.

    Counter-based: the result depends only on ``keys``, never on call order,
    so parallel workers reproduce sequential draws exactly.
    """
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def resolve_threads(threads=None):
    if threads is None:
        threads = os.environ.get(THREADS_ENV, 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def ordered_map(fn, items, threads=1):
    """``list(map(fn, items))``, optionally on a thread pool; output order is input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
