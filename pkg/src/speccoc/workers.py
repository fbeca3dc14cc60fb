"""
workers.py

Bounded thread pool for grid scans. Results come back in input order and
every task gets its own random stream split from the master seed.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "SPECCOC_THREADS"


def pool_size(requested: Optional[int] = None) -> int:
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            n = int(env)
            if n > 0:
                return n
        except ValueError:
            pass
        logger.warning("ignoring %s=%r (expected a positive integer)", THREADS_ENV, env)
    return min(os.cpu_count() or 1, 8)


def task_seed(seed: Optional[int], index: int) -> np.random.SeedSequence:
    """Independent stream for task `index` of a run seeded with `seed`."""
    return np.random.SeedSequence(seed if seed is not None else 0, spawn_key=(index,))


def ordered_map(fn: Callable[[int, T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """[fn(i, item) for i, item in enumerate(items)], possibly in parallel."""
    n = pool_size(threads)
    if n == 1 or len(items) <= 1:
        return [fn(i, x) for i, x in enumerate(items)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(fn, i, x) for i, x in enumerate(items)]
        return [f.result() for f in futures]
