"""Deterministic path-parallel execution.

Work is always split into the same fixed-size chunks of path indices; the
worker count only decides how many chunks run concurrently.  Because every
chunk writes a disjoint row range of preallocated arrays and all draws are
counter-addressed, results are bitwise independent of the worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

CHUNK_PATHS = 65536


def chunk_ranges(n_paths, chunk=CHUNK_PATHS):
    return [(lo, min(lo + chunk, n_paths)) for lo in range(0, n_paths, chunk)]


def resolve_workers(workers=None):
    """Explicit worker count, else the MSSV_WORKERS environment variable,
    else 1."""
    if workers is None:
        env = os.environ.get("MSSV_WORKERS", "").strip()
        workers = int(env) if env else 1
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be at least 1")
    return workers


def run_chunks(fn, n_paths, workers):
    """Invoke fn(lo, hi) over every chunk, possibly concurrently."""
    ranges = chunk_ranges(n_paths)
    if workers <= 1 or len(ranges) <= 1:
        for lo, hi in ranges:
            fn(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # list() drains the iterator so worker exceptions propagate
        list(pool.map(lambda bounds: fn(*bounds), ranges))
