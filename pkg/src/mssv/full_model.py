"""Two-factor stochastic volatility simulator used as the pricing oracle.

The spot follows dS = r·S dt + f(y, z)·S dW with f(y, z) = σ·e^{y+z};
y is a fast Ornstein-Uhlenbeck factor with rate 1/eps and stationary
standard deviation nu1, z a slow one with rate delta and stationary
standard deviation nu2.  The three Brownian drivers are correlated
through the lower-triangular factor of their correlation matrix.

Integration is Euler-Maruyama on a refined substep grid: the spot is
stepped in log space (so simulated values stay positive) with the
volatility frozen at each substep's start, and the factors are stepped
in natural space.  Every substep's normal triple is addressed by
(seed, path, substep) on its own counter domain, so results are bitwise
independent of worker count and batch partitioning, and independent of
the GBM engine's draws for the same seed.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._parallel import resolve_workers, run_chunks
from .paths import DEFAULT_MEMORY_BUDGET, MemoryBudgetError
from .payoffs import evaluate_batch
from .pricing import estimate_from_samples
from .rng import TAG_FULL_MODEL, _U0, _inv_norm, _philox, _uniform


@dataclass(frozen=True)
class FullModelBatch:
    """Monitored spot paths of the full model plus terminal factor values.

    ``values`` has one row per path with the spot at each monitoring
    date; ``y_terminal``/``z_terminal`` hold the factor states at
    maturity for diagnostics."""

    grid: object
    params: object
    r: float
    n_paths: int
    seed: int
    substeps_per_interval: int
    values: np.ndarray
    y_terminal: np.ndarray
    z_terminal: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.n_paths, self.grid.n):
            raise ValueError("values must have shape (n_paths, n)")
        for name in ("y_terminal", "z_terminal"):
            if getattr(self, name).shape != (self.n_paths,):
                raise ValueError(f"{name} must have shape (n_paths,)")
        self.values.setflags(write=False)
        self.y_terminal.setflags(write=False)
        self.z_terminal.setflags(write=False)


def default_substeps(grid, eps):
    """Smallest per-interval substep count keeping every Euler step h at
    or below min(interval/10, eps/10): the first bound resolves the
    monitoring interval, the second the fast factor's relaxation time."""
    widest = float(np.max(grid.dts()))
    return max(10, math.ceil(10.0 * widest / eps))


@njit(cache=True, nogil=True)
def _full_chunk(lo, hi, seed, dts, substeps, r, eps, delta, m1, m2,
                nu1, nu2, sigma, y0, z0, s0, l10, l11, l20, l21, l22,
                values, y_terminal, z_terminal):
    n = dts.shape[0]
    for p in range(lo, hi):
        pu = np.uint64(p)
        y = y0
        z = z0
        log_s = math.log(s0)
        g = 0
        for j in range(n):
            h = dts[j] / substeps
            sqrt_h = math.sqrt(h)
            pull_fast = h / eps
            shock_fast = math.sqrt(2.0 / eps) * nu1 * sqrt_h
            pull_slow = delta * h
            shock_slow = math.sqrt(2.0 * delta) * nu2 * sqrt_h
            for _ in range(substeps):
                r0, r1, r2, r3 = _philox(
                    pu, np.uint64(g), TAG_FULL_MODEL, _U0, seed, _U0)
                u0 = _inv_norm(_uniform(r0))
                u1 = _inv_norm(_uniform(r1))
                u2 = _inv_norm(_uniform(r2))
                xi_s = u0
                xi_y = l10 * u0 + l11 * u1
                xi_z = l20 * u0 + l21 * u1 + l22 * u2
                f = sigma * math.exp(y + z)
                log_s = log_s + (r - 0.5 * f * f) * h + f * sqrt_h * xi_s
                y = y + (m1 - y) * pull_fast + shock_fast * xi_y
                z = z + (m2 - z) * pull_slow + shock_slow * xi_z
                g += 1
            values[p, j] = math.exp(log_s)
        y_terminal[p] = y
        z_terminal[p] = z


def _check_budget(n_paths, n, memory_budget):
    need = 8 * n_paths * (n + 2)
    if need > memory_budget:
        raise MemoryBudgetError(
            f"full-model batch requires {need} bytes for {n_paths} paths "
            f"x {n} dates, exceeding the {memory_budget}-byte memory budget"
        )


def simulate_full(params, grid, substeps_per_interval, n_paths, seed, r,
                  workers=None, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Simulate ``n_paths`` full-model paths on the monitoring grid.

    ``substeps_per_interval`` may be None to derive the default from
    ``default_substeps``.  A RuntimeWarning (not an error) is issued when
    the realized step exceeds eps/10, since the fast factor is stiff.
    """
    workers = resolve_workers(workers)
    n = grid.n
    n_paths = int(n_paths)
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if not (0 <= seed < 2**64):
        raise ValueError("seed must be a 64-bit unsigned integer")
    if substeps_per_interval is None:
        substeps_per_interval = default_substeps(grid, params.eps)
    substeps_per_interval = int(substeps_per_interval)
    if substeps_per_interval < 1:
        raise ValueError("substeps_per_interval must be at least 1")
    _check_budget(n_paths, n, memory_budget)
    dts = grid.dts()
    widest_step = float(np.max(dts)) / substeps_per_interval
    if widest_step > params.eps / 10.0:
        warnings.warn(
            f"substep {widest_step:.6g} exceeds eps/10 = "
            f"{params.eps / 10.0:.6g}; the fast factor may be "
            f"under-resolved",
            RuntimeWarning, stacklevel=2)
    chol = params.cholesky()
    values = np.empty((n_paths, n))
    y_terminal = np.empty(n_paths)
    z_terminal = np.empty(n_paths)
    seed_u = np.uint64(seed)

    def kernel(lo, hi):
        _full_chunk(lo, hi, seed_u, dts, substeps_per_interval, float(r),
                    params.eps, params.delta, params.m1, params.m2,
                    params.nu1, params.nu2, params.sigma, params.y0,
                    params.z0, params.s0, float(chol[1, 0]),
                    float(chol[1, 1]), float(chol[2, 0]),
                    float(chol[2, 1]), float(chol[2, 2]),
                    values, y_terminal, z_terminal)

    run_chunks(kernel, n_paths, workers)
    return FullModelBatch(
        grid=grid, params=params, r=float(r), n_paths=n_paths,
        seed=int(seed), substeps_per_interval=substeps_per_interval,
        values=values, y_terminal=y_terminal, z_terminal=z_terminal,
    )


def discounted_samples(batch, payoff, r, T):
    """Per-path discounted payoff samples from a full-model batch."""
    return math.exp(-r * T) * evaluate_batch(payoff, batch.values, batch.grid.n)


def price_full(batch, payoff, r, T):
    """Monte Carlo price of ``payoff`` under the full model."""
    return estimate_from_samples(discounted_samples(batch, payoff, r, T))
