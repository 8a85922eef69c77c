"""Price estimation: zero-order and weight-corrected Monte Carlo means,
single-date Greek estimates, and prefix-consistent convergence series.

All reductions use exactly rounded summation (math.fsum), so estimates
are independent of worker count and of the order in which payoffs are
priced against a shared batch.
"""

import math
from dataclasses import dataclass

import numpy as np

from .payoffs import evaluate_batch

__all__ = [
    "Estimate",
    "Checkpoint",
    "ConvergenceSeries",
    "price_zero_order",
    "price_corrected",
    "greek_estimates",
    "convergence",
    "write_convergence_csv",
]

GREEK_KEYS = ("D1", "D2", "dSigma", "D1dSigma")


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with its standard error and 95% interval."""

    mean: float
    stderr: float
    n_paths: int
    ci95_low: float
    ci95_high: float


@dataclass(frozen=True)
class Checkpoint:
    """Estimates computed from the first n paths of a batch."""

    n: int
    zero_order: Estimate
    corrected: Estimate
    full_model: Estimate = None


@dataclass(frozen=True)
class ConvergenceSeries:
    checkpoints: tuple


def estimate_from_samples(samples):
    """Mean, unbiased standard error, and 95% interval of a sample set.

    Sums are exactly rounded, so the result does not depend on sample
    storage order or chunking.  A single sample has no dispersion
    estimate: its stderr and interval are NaN.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    if n < 1:
        raise ValueError("at least one sample required")
    mean = math.fsum(samples) / n
    if n == 1:
        return Estimate(mean=mean, stderr=math.nan, n_paths=1,
                        ci95_low=math.nan, ci95_high=math.nan)
    deviations = samples - mean
    ss = math.fsum(deviations * deviations)
    stderr = math.sqrt(ss / (n - 1) / n)
    return Estimate(mean=mean, stderr=stderr, n_paths=n,
                    ci95_low=mean - 1.96 * stderr,
                    ci95_high=mean + 1.96 * stderr)


def _discounted_payoffs(batch, payoff, r, T):
    disc = math.exp(-r * T)
    return disc * evaluate_batch(payoff, batch.values, batch.grid.n)


def price_zero_order(batch, payoff, r, T):
    """Plain Monte Carlo price: mean of discounted payoffs."""
    return estimate_from_samples(_discounted_payoffs(batch, payoff, r, T))


def price_corrected(batch, weights, payoff, r, T):
    """First-order-corrected price: mean of discounted payoff times the
    path's aggregate weight.  The weights must have been built from this
    exact batch; the identity token enforces that."""
    if weights.token != batch.token:
        raise ValueError("weights token does not match batch")
    samples = _discounted_payoffs(batch, payoff, r, T) * weights.totals
    return estimate_from_samples(samples)


def greek_estimates(batch, payoff, sigma_bar, r, T):
    """Greek estimates on a single-date grid via the vanilla weights.

    Returns estimates keyed D1 (x·∂/∂x), D2 (x²·∂²/∂x²), dSigma (∂/∂σ),
    and D1dSigma (x·∂²/∂x∂σ), each the mean of discounted payoff times
    the corresponding weight.
    """
    if batch.grid.n != 1:
        raise ValueError("greek estimates require a single-date grid")
    w = batch.increments[:, 0]
    st = sigma_bar * T
    core = ((w - st) * w / T - 1.0) / sigma_bar
    pi_gamma = core / st
    pi_sigma = st * pi_gamma
    pi_delta = w / st
    pi_vanna = core * pi_delta - (w + (w - st)) / ((sigma_bar * sigma_bar) * T)
    base = _discounted_payoffs(batch, payoff, r, T)
    return {
        "D1": estimate_from_samples(base * pi_delta),
        "D2": estimate_from_samples(base * pi_gamma),
        "dSigma": estimate_from_samples(base * pi_sigma),
        "D1dSigma": estimate_from_samples(base * pi_vanna),
    }


def convergence(batch, weights, payoff, checkpoints, full_samples=None):
    """Zero-order and corrected estimates over increasing path-count
    prefixes of one batch (plus optional reference-model estimates from
    a parallel discounted sample array)."""
    if weights.token != batch.token:
        raise ValueError("weights token does not match batch")
    counts = [int(n) for n in checkpoints]
    for prev, cur in zip(counts, counts[1:]):
        if cur <= prev:
            raise ValueError("checkpoints must be strictly increasing")
    if counts and counts[0] < 1:
        raise ValueError("checkpoints must be positive")
    if counts and counts[-1] > batch.n_paths:
        raise ValueError("checkpoint exceeds batch")
    if full_samples is not None and len(full_samples) < (counts[-1] if counts else 0):
        raise ValueError("checkpoint exceeds full-model sample count")
    T = batch.grid.times[-1]
    base = _discounted_payoffs(batch, payoff, batch.r, T)
    corrected = base * weights.totals
    rows = []
    for n in counts:
        rows.append(Checkpoint(
            n=n,
            zero_order=estimate_from_samples(base[:n]),
            corrected=estimate_from_samples(corrected[:n]),
            full_model=(None if full_samples is None
                        else estimate_from_samples(full_samples[:n])),
        ))
    return ConvergenceSeries(checkpoints=tuple(rows))


def write_convergence_csv(series, dest):
    """One row per checkpoint, 17-significant-digit decimals; the
    full-model columns appear only when the series carries them."""
    rows = series.checkpoints
    with_full = bool(rows) and rows[0].full_model is not None
    if any((cp.full_model is not None) != with_full for cp in rows):
        raise ValueError("inconsistent full-model columns across checkpoints")
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "w") if own else dest
    try:
        header = "N,zero_mean,zero_stderr,corr_mean,corr_stderr"
        if with_full:
            header += ",full_mean,full_stderr"
        fh.write(header + "\n")
        for cp in rows:
            cells = [
                "%d" % cp.n,
                "%.17g" % cp.zero_order.mean, "%.17g" % cp.zero_order.stderr,
                "%.17g" % cp.corrected.mean, "%.17g" % cp.corrected.stderr,
            ]
            if with_full:
                cells += ["%.17g" % cp.full_model.mean,
                          "%.17g" % cp.full_model.stderr]
            fh.write(",".join(cells) + "\n")
    finally:
        if own:
            fh.close()
