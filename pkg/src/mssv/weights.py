"""Correction weights: per-interval Greek weights and the aggregate
first-order multiplier.

Each simulated path receives a multiplier built from its Brownian
increments; averaging payoff·multiplier yields the volatility-corrected
price without ever simulating the volatility factors.  The per-interval
weights (delta, third-derivative, sigma, vanna) all have zero mean, so
the aggregate multiplier has unit mean and adds no bias to a payoff it
does not correlate with.

Floating-point layout note: the vanilla (single-date) weights and the
discrete weights evaluated on a one-interval grid are the same functions
of the terminal increment.  Every shared sub-expression is computed with
an identical operation tree in the scalar, vectorized, and compiled
implementations, so that identity holds to a couple of ulp per path —
and exactly, when σ̄·T is a power of two — rather than merely in
expectation.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._parallel import resolve_workers, run_chunks

__all__ = [
    "PathWeights",
    "VanillaWeights",
    "BatchWeights",
    "delta_weight",
    "third_weight",
    "sigma_weight",
    "vanna_weight",
    "h_weight",
    "aggregate_weight",
    "vanilla_weights",
    "batch_weights",
    "write_diagnostics",
]

DIAGNOSTIC_COLUMNS = ("path_index", "j", "pi_delta", "pi_3", "pi_sigma",
                      "pi_vanna", "pi_h")


@dataclass(frozen=True)
class PathWeights:
    """Weight series of a single path: per-interval combined weights and
    the aggregate multiplier; component series only when requested."""

    pi_h: np.ndarray
    total: float
    pi_delta: np.ndarray = None
    pi_3: np.ndarray = None
    pi_sigma: np.ndarray = None
    pi_vanna: np.ndarray = None


@dataclass(frozen=True)
class VanillaWeights:
    """Single-date weights as functions of the terminal Brownian
    increment over a horizon tau."""

    pi_gamma: float
    pi_sigma: float
    pi_delta: float
    pi_vanna: float
    pi_h_integrated: float
    total: float


@dataclass(frozen=True)
class BatchWeights:
    """Aggregate multiplier per path, tied to its source batch by the
    batch's identity token."""

    totals: np.ndarray
    token: tuple = field(compare=False)

    def __post_init__(self):
        self.totals.setflags(write=False)


# ---------------------------------------------------------------------------
# Scalar reference implementation (one path, one interval index)


def _g_term(increments, dts, sigma_bar, k):
    return ((increments[k] - sigma_bar * dts[k]) * increments[k]) / dts[k]


def delta_weight(increments, dts, j, sigma_bar):
    """First-derivative weight for interval j: ΔW_j/(σ̄·Δt_j)."""
    return increments[j] / (sigma_bar * dts[j])


def sigma_weight(increments, dts, j, sigma_bar):
    """Volatility-derivative weight for interval j, built from the
    remaining intervals j..n-1."""
    n = len(increments)
    acc = _g_term(increments, dts, sigma_bar, n - 1)
    for k in range(n - 2, j - 1, -1):
        acc = acc + _g_term(increments, dts, sigma_bar, k)
    return (acc - (n - j)) / sigma_bar


def vanna_weight(increments, dts, j, sigma_bar):
    """Mixed spot/volatility weight for interval j.

    The subtracted term (ΔW_j + F_j)/(σ̄²Δt_j) = (2/σ̄)π_Δ,j − 1/σ̄ involves
    only interval j's own increment, so the weight has zero expectation
    against any function of the terminal level — matching the vanilla
    single-date form interval by interval.
    """
    ps = sigma_weight(increments, dts, j, sigma_bar)
    pd = increments[j] / (sigma_bar * dts[j])
    f = increments[j] - sigma_bar * dts[j]
    return ps * pd - (increments[j] + f) / ((sigma_bar * sigma_bar) * dts[j])


def third_weight(increments, dts, j, sigma_bar):
    """Third-derivative weight for interval j.

    Computed as (π_Δ·ψ − (2/σ̄)π_Δ + 1/σ̄)/(σ̄Δt_j) with
    ψ = ((ΔW−σ̄Δt_j)ΔW/Δt_j − 1)/σ̄, which expands to the canonical
    π_Δ³ − π_Δ² − (3π_Δ−1)/(σ̄²Δt_j); this grouping keeps the
    single-date identity with the vanilla weights exact per path.
    """
    pd = increments[j] / (sigma_bar * dts[j])
    psi = (_g_term(increments, dts, sigma_bar, j) - 1.0) / sigma_bar
    return (pd * psi - 2.0 / sigma_bar * pd + 1.0 / sigma_bar) / (sigma_bar * dts[j])


def h_weight(increments, dts, j, group):
    """Combined correction weight for interval j: the group-coefficient
    linear combination of the sigma, vanna, and third weights."""
    sb = group.sigma_bar
    return (2.0 * group.v0_delta * sigma_weight(increments, dts, j, sb)
            + 2.0 * group.v1_delta * vanna_weight(increments, dts, j, sb)
            + group.v3_eps * third_weight(increments, dts, j, sb))


# ---------------------------------------------------------------------------
# Vectorized implementation (rows of paths)


def _components_matrix(increments, dts, sigma_bar):
    """pi_delta, pi_3, pi_sigma, pi_vanna for every (path, interval) of a
    2D increment matrix, bitwise-identical to the scalar functions."""
    n = increments.shape[1]
    g = ((increments - sigma_bar * dts) * increments) / dts
    gsuf = np.cumsum(g[:, ::-1], axis=1)[:, ::-1]
    remaining = np.arange(n, 0, -1, dtype=np.float64)
    pd = increments / (sigma_bar * dts)
    ps = (gsuf - remaining) / sigma_bar
    f = increments - sigma_bar * dts
    pv = ps * pd - (increments + f) / ((sigma_bar * sigma_bar) * dts)
    psi = (g - 1.0) / sigma_bar
    p3 = (pd * psi - 2.0 / sigma_bar * pd + 1.0 / sigma_bar) / (sigma_bar * dts)
    return pd, p3, ps, pv


def _h_matrix(components, group):
    pd, p3, ps, pv = components
    return (2.0 * group.v0_delta * ps
            + 2.0 * group.v1_delta * pv
            + group.v3_eps * p3)


def aggregate_weight(increments, grid, group, components=False):
    """Weight series and aggregate multiplier for one path.

    The aggregate is 1 plus the time-weighted sum of the per-interval
    combined weights, accumulated in ascending interval order with
    compensated summation so it is bitwise reproducible.
    """
    increments = np.asarray(increments, dtype=np.float64)
    dts = grid.dts()
    comps = _components_matrix(increments[None, :], dts, group.sigma_bar)
    ph = _h_matrix(comps, group)[0]
    s = 0.0
    c = 0.0
    for j in range(ph.shape[0]):
        y = ph[j] * dts[j] - c
        t = s + y
        c = (t - s) - y
        s = t
    if components:
        pd, p3, ps, pv = (a[0] for a in comps)
        return PathWeights(pi_h=ph, total=1.0 + s, pi_delta=pd, pi_3=p3,
                           pi_sigma=ps, pi_vanna=pv)
    return PathWeights(pi_h=ph, total=1.0 + s)


def vanilla_weights(increment, tau, sigma_bar, group):
    """Single-date weights over horizon tau from the terminal Brownian
    increment, with the combined weight integrated over the horizon by
    the left-endpoint rule."""
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    w = float(increment)
    st = sigma_bar * tau
    core = ((w - st) * w / tau - 1.0) / sigma_bar
    pi_gamma = core / st
    pi_sigma = st * pi_gamma
    pi_delta = w / st
    pi_vanna = core * pi_delta - (w + (w - st)) / ((sigma_bar * sigma_bar) * tau)
    pi_h_integrated = tau * (
        2.0 * group.v0_delta * pi_sigma
        + (2.0 * group.v1_delta + group.v3_eps / st) * pi_vanna
    )
    return VanillaWeights(
        pi_gamma=pi_gamma, pi_sigma=pi_sigma, pi_delta=pi_delta,
        pi_vanna=pi_vanna, pi_h_integrated=pi_h_integrated,
        total=1.0 + pi_h_integrated,
    )


# ---------------------------------------------------------------------------
# Compiled whole-batch implementation


@njit(cache=True, nogil=True)
def _totals_chunk(lo, hi, increments, dts, sigma_bar, v0, v1, v3, totals):
    n = dts.shape[0]
    gsuf = np.empty(n)
    for p in range(lo, hi):
        w_last = increments[p, n - 1]
        gsuf[n - 1] = ((w_last - sigma_bar * dts[n - 1]) * w_last) / dts[n - 1]
        for k in range(n - 2, -1, -1):
            w = increments[p, k]
            gsuf[k] = gsuf[k + 1] + ((w - sigma_bar * dts[k]) * w) / dts[k]
        s = 0.0
        c = 0.0
        for j in range(n):
            w = increments[p, j]
            pd = w / (sigma_bar * dts[j])
            ps = (gsuf[j] - (n - j)) / sigma_bar
            f = w - sigma_bar * dts[j]
            pv = ps * pd - (w + f) / ((sigma_bar * sigma_bar) * dts[j])
            psi = (((w - sigma_bar * dts[j]) * w) / dts[j] - 1.0) / sigma_bar
            p3 = (pd * psi - 2.0 / sigma_bar * pd + 1.0 / sigma_bar) / (sigma_bar * dts[j])
            ph = 2.0 * v0 * ps + 2.0 * v1 * pv + v3 * p3
            y = ph * dts[j] - c
            t = s + y
            c = (t - s) - y
            s = t
        totals[p] = 1.0 + s


def batch_weights(batch, group, workers=None):
    """Aggregate multiplier for every path of a batch.

    Bitwise identical for any worker count, and stamped with the batch's
    identity token so pricing can reject mismatched combinations.
    """
    if group.sigma_bar != batch.sigma_bar:
        raise ValueError("group sigma_bar does not match batch")
    workers = resolve_workers(workers)
    dts = batch.grid.dts()
    totals = np.empty(batch.n_paths)

    def fill(lo, hi):
        _totals_chunk(lo, hi, batch.increments, dts, group.sigma_bar,
                      group.v0_delta, group.v1_delta, group.v3_eps, totals)

    run_chunks(fill, batch.n_paths, workers)
    return BatchWeights(totals=totals, token=batch.token)


# ---------------------------------------------------------------------------
# Diagnostics


def write_diagnostics(batch, group, dest, chunk_paths=4096):
    """Write one CSV row per (path, interval) with the component weight
    series; dest is a file path or a text-mode file object."""
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "w") if own else dest
    try:
        fh.write(",".join(DIAGNOSTIC_COLUMNS) + "\n")
        dts = batch.grid.dts()
        n = batch.grid.n
        for lo in range(0, batch.n_paths, chunk_paths):
            hi = min(lo + chunk_paths, batch.n_paths)
            rows = batch.increments[lo:hi]
            pd, p3, ps, pv = _components_matrix(rows, dts, group.sigma_bar)
            ph = _h_matrix((pd, p3, ps, pv), group)
            for p in range(hi - lo):
                for j in range(n):
                    fh.write("%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                        lo + p, j, pd[p, j], p3[p, j], ps[p, j],
                        pv[p, j], ph[p, j]))
    finally:
        if own:
            fh.close()
