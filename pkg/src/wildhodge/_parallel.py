"""Thread-pool plumbing shared by the enumeration and restart loops.

WILDHODGE_THREADS caps the worker count; unset or invalid falls back to the
CPU count. Results always come back in submission order so callers stay
deterministic regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(n_items: int) -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get("WILDHODGE_THREADS")
    if env:
        try:
            requested = int(env)
        except ValueError:
            requested = 0
        if requested >= 1:
            cap = requested
    return max(1, min(n_items, cap))


def thread_map(fn, items) -> list:
    items = list(items)
    if not items:
        return []
    workers = worker_count(len(items))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
