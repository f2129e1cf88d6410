"""Replica-parallel execution with results independent of the worker count.

Replicas are cut into fixed-size blocks.  Block ``b`` of a run keyed by
``key`` draws from ``SeedSequence(seed, spawn_key=(*key, b))``, so the
numbers it sees do not depend on which worker runs it or how many workers
exist.  Block outputs are concatenated in block order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import ParameterError

BLOCK_SIZE = 4096


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def _run_block(task):
    fn, seed, key, size, args = task
    return fn(stream(seed, *key), size, *args)


def run_blocks(fn, replicas: int, seed: int, args=(), key=(), jobs: int = 1, block_size: int = BLOCK_SIZE):
    """Evaluate ``fn(rng, size, *args)`` over all blocks and stack the results.

    ``fn`` must return an array whose first axis has length ``size``.  It
    must be a module-level function when ``jobs > 1``.
    """
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    tasks = []
    for b, lo in enumerate(range(0, replicas, block_size)):
        tasks.append((fn, seed, (*key, b), min(block_size, replicas - lo), args))
    if jobs <= 1 or len(tasks) == 1:
        parts = [_run_block(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_block, tasks))
    return np.concatenate(parts, axis=0)
