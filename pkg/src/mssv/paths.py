"""Geometric Brownian motion path batches at the effective volatility.

Paths are generated on the monitoring grid only: the exponential-Euler
update is exact for GBM, so no finer stepping is needed.  Brownian
increments are retained because the correction weights are built from
them.  Every increment is a pure function of (seed, path index, interval
index), which makes batches bitwise reproducible for any worker count or
partitioning.
"""

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._parallel import resolve_workers, run_chunks
from .config import MonitoringGrid
from .rng import TAG_GBM, _U0, _inv_norm, _philox, _uniform

DEFAULT_MEMORY_BUDGET = 4 * 2**30  # bytes

_MAGIC = b"MSSVPB1"


class MemoryBudgetError(RuntimeError):
    """A batch would exceed the configured memory budget."""


@dataclass(frozen=True)
class PathBatch:
    """Simulated GBM paths: increments ΔW over each grid interval and the
    monitored values X_{t_1..t_n}, one row per path.

    ``token`` is a content-derived identity used to guarantee that weights
    are only ever combined with the batch they were built from; it is
    stable across dump/load round trips."""

    grid: MonitoringGrid
    s0: float
    sigma_bar: float
    r: float
    n_paths: int
    seed: int
    increments: np.ndarray
    values: np.ndarray
    token: tuple = field(init=False, compare=False, default=None)

    def __post_init__(self):
        n = self.grid.n
        for name in ("increments", "values"):
            arr = getattr(self, name)
            if arr.shape != (self.n_paths, n):
                raise ValueError(f"{name} must have shape (n_paths, n)")
            arr.setflags(write=False)
        digest = hashlib.blake2b(
            np.ascontiguousarray(self.increments).data, digest_size=16
        ).hexdigest()
        object.__setattr__(self, "token", (
            digest, self.n_paths, self.grid.times,
            self.sigma_bar, self.r, self.s0,
        ))


@njit(cache=True, nogil=True)
def _fill_chunk(lo, hi, seed, sqrt_dts, log_drifts, sigma_bar, s0, increments, values):
    n = sqrt_dts.shape[0]
    nblocks = (n + 3) // 4
    for p in range(lo, hi):
        pu = np.uint64(p)
        for b in range(nblocks):
            r0, r1, r2, r3 = _philox(pu, np.uint64(b), TAG_GBM, _U0, seed, _U0)
            j = 4 * b
            increments[p, j] = _inv_norm(_uniform(r0)) * sqrt_dts[j]
            if j + 1 < n:
                increments[p, j + 1] = _inv_norm(_uniform(r1)) * sqrt_dts[j + 1]
            if j + 2 < n:
                increments[p, j + 2] = _inv_norm(_uniform(r2)) * sqrt_dts[j + 2]
            if j + 3 < n:
                increments[p, j + 3] = _inv_norm(_uniform(r3)) * sqrt_dts[j + 3]
        x = s0
        for j in range(n):
            x = x * math.exp(log_drifts[j] + sigma_bar * increments[p, j])
            values[p, j] = x


@njit(cache=True, nogil=True)
def _values_chunk(lo, hi, log_drifts, sigma_bar, s0, increments, values):
    n = log_drifts.shape[0]
    for p in range(lo, hi):
        x = s0
        for j in range(n):
            x = x * math.exp(log_drifts[j] + sigma_bar * increments[p, j])
            values[p, j] = x


def _check_budget(n_paths, n, memory_budget):
    need = 2 * 8 * n_paths * n
    if need > memory_budget:
        raise MemoryBudgetError(
            f"batch requires {need} bytes for {n_paths} paths x {n} dates, "
            f"exceeding the {memory_budget}-byte memory budget"
        )


def _log_drifts(grid, sigma_bar, r):
    return (r - 0.5 * sigma_bar * sigma_bar) * grid.dts()


def simulate_batch(config, workers=None, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Simulate the batch described by a PricingConfig.

    The result is bitwise identical for any worker count; the memory
    budget is enforced before anything is allocated or simulated.
    """
    workers = resolve_workers(workers)
    grid = config.grid
    n = grid.n
    n_paths = config.n_paths
    _check_budget(n_paths, n, memory_budget)
    sigma_bar = config.group.sigma_bar
    r = config.group.r
    sqrt_dts = np.sqrt(grid.dts())
    log_drifts = _log_drifts(grid, sigma_bar, r)
    increments = np.empty((n_paths, n))
    values = np.empty((n_paths, n))
    seed = np.uint64(config.seed)
    s0 = float(config.s0)

    def fill(lo, hi):
        _fill_chunk(lo, hi, seed, sqrt_dts, log_drifts, sigma_bar, s0,
                    increments, values)

    run_chunks(fill, n_paths, workers)
    return PathBatch(
        grid=grid, s0=s0, sigma_bar=sigma_bar, r=r, n_paths=n_paths,
        seed=config.seed, increments=increments, values=values,
    )


def batch_from_increments(grid, s0, sigma_bar, r, seed, increments):
    """Build a batch from externally supplied Brownian increments (test
    hook; e.g. all-zero increments isolate the deterministic drift)."""
    increments = np.ascontiguousarray(increments, dtype=np.float64)
    if increments.ndim != 2 or increments.shape[1] != grid.n:
        raise ValueError("increments must have shape (n_paths, n)")
    n_paths = increments.shape[0]
    log_drifts = _log_drifts(grid, sigma_bar, r)
    values = np.empty_like(increments)
    _values_chunk(0, n_paths, log_drifts, sigma_bar, float(s0),
                  increments, values)
    return PathBatch(
        grid=grid, s0=float(s0), sigma_bar=float(sigma_bar), r=float(r),
        n_paths=n_paths, seed=seed, increments=increments, values=values,
    )


def increments_of(batch, path_index):
    """The n Brownian increments of one path, in grid order."""
    if not 0 <= path_index < batch.n_paths:
        raise IndexError("path_index out of range")
    return batch.increments[path_index]


def dump_batch(batch, path):
    """Write a batch to a binary file: magic, counts, market fields, grid
    times, then row-major increments and values (all little-endian)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack(
            "<QQQddd", batch.n_paths, batch.grid.n, batch.seed,
            batch.sigma_bar, batch.r, batch.s0,
        ))
        fh.write(np.asarray(batch.grid.times, dtype="<f8").tobytes())
        fh.write(batch.increments.astype("<f8", copy=False).tobytes())
        fh.write(batch.values.astype("<f8", copy=False).tobytes())


def load_batch(path):
    """Read a batch written by dump_batch."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("not a path batch dump: bad magic")
        n_paths, n, seed, sigma_bar, r, s0 = struct.unpack(
            "<QQQddd", fh.read(8 * 6)
        )
        times = np.frombuffer(fh.read(8 * n), dtype="<f8")
        increments = np.frombuffer(
            fh.read(8 * n_paths * n), dtype="<f8"
        ).reshape(n_paths, n).copy()
        values = np.frombuffer(
            fh.read(8 * n_paths * n), dtype="<f8"
        ).reshape(n_paths, n).copy()
    return PathBatch(
        grid=MonitoringGrid(times=tuple(times)), s0=s0, sigma_bar=sigma_bar,
        r=r, n_paths=n_paths, seed=seed, increments=increments, values=values,
    )
