"""Optional thread-level parallelism with deterministic ordering."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "WBOKIT_THREADS"


def resolve_threads(requested=None):
    """Worker count: explicit request, else the WBOKIT_THREADS variable, else 1."""
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            requested = int(raw)
        except ValueError:
            return 1
    return max(1, int(requested))


def ordered_map(fn, items, threads=1):
    """map() preserving input order, optionally across a thread pool."""
    items = list(items)
    threads = resolve_threads(threads)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
