"""Deterministic parallel mapping over independent work items.

Results are returned in input order regardless of worker count or
scheduling, so any reduction over them is reproducible.
"""

from __future__ import annotations

import multiprocessing as mp
from typing import Callable, Sequence


def deterministic_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """map(fn, items) with an optional process pool; order always preserved."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (8 * workers))
    with mp.get_context("fork").Pool(workers) as pool:
        return pool.map(fn, items, chunksize=chunk)
