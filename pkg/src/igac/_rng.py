"""Counter-based random substreams and deterministic chunked parallel maps."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional

import numpy as np

MASK64 = (1 << 64) - 1


def substream(seed: int, *index: int) -> np.random.Generator:
    """Independent Philox stream keyed by ``seed`` and positioned by ``index``.

    Up to two integer indices are placed in the high counter words, so every
    ``(seed, index)`` pair owns a disjoint block of the Philox sequence and
    the draws do not depend on which worker consumes them.
    """
    if len(index) > 2:
        raise ValueError("at most two substream indices")
    words = [0, 0] + [int(i) & MASK64 for i in index] + [0] * (2 - len(index))
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64, counter=words))


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, else ``IGAC_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("IGAC_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def ordered_map(fn: Callable, items: Iterable, threads: Optional[int] = None) -> list:
    """``[fn(x) for x in items]`` evaluated on up to ``threads`` workers, results in input order."""
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
