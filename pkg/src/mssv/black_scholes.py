"""Closed-form Black-Scholes prices and Greeks.

These are the exact oracles the Monte Carlo estimators are validated
against.  The D-operator convention is multiplicative: D1 = S dP/dS,
D2 = S^2 d2P/dS2, and vanna_d1 = S d2P/dSdsigma.
"""

import math
from dataclasses import dataclass

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(x):
    """Standard normal CDF via erfc (accurate to ~1 ulp over both tails)."""
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_pdf(x):
    return math.exp(-0.5 * x * x) * _INV_SQRT_2PI


@dataclass(frozen=True)
class BsInputs:
    spot: float
    strike: float
    rate: float
    vol: float
    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.spot) and self.spot > 0.0):
            raise ValueError("spot must be positive and finite")
        if not (math.isfinite(self.strike) and self.strike >= 0.0):
            raise ValueError("strike must be nonnegative and finite")
        if not math.isfinite(self.rate):
            raise ValueError("rate must be finite")
        if not (math.isfinite(self.vol) and self.vol > 0.0):
            raise ValueError("vol must be positive and finite")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ValueError("tau must be positive and finite")


def _d1_d2(inputs):
    s, k, r, sig, tau = (
        inputs.spot, inputs.strike, inputs.rate, inputs.vol, inputs.tau,
    )
    sq = math.sqrt(tau)
    d1 = (math.log(s / k) + (r + 0.5 * sig * sig) * tau) / (sig * sq)
    return d1, d1 - sig * sq


def bs_price(inputs, kind):
    """Black-Scholes price of a European call or put (kind: 'call'/'put')."""
    if kind not in ("call", "put"):
        raise ValueError("kind must be 'call' or 'put'")
    if inputs.strike == 0.0:
        # zero-strike call is the asset itself; the matching put is worthless
        return inputs.spot if kind == "call" else 0.0
    d1, d2 = _d1_d2(inputs)
    disc_k = inputs.strike * math.exp(-inputs.rate * inputs.tau)
    if kind == "call":
        return inputs.spot * norm_cdf(d1) - disc_k * norm_cdf(d2)
    return disc_k * norm_cdf(-d2) - inputs.spot * norm_cdf(-d1)


def bs_greeks(inputs, kind):
    """Closed-form {D1, D2, vega, vanna_d1} for a call or put.

    vega satisfies vega = vol * tau * D2 identically.
    """
    if kind not in ("call", "put"):
        raise ValueError("kind must be 'call' or 'put'")
    s, sig, tau = inputs.spot, inputs.vol, inputs.tau
    if inputs.strike == 0.0:
        d1_mass = 1.0 if kind == "call" else 0.0
        return {"D1": s * d1_mass, "D2": 0.0, "vega": 0.0, "vanna_d1": 0.0}
    d1, d2 = _d1_d2(inputs)
    sq = math.sqrt(tau)
    pdf = norm_pdf(d1)
    delta_mass = norm_cdf(d1) if kind == "call" else norm_cdf(d1) - 1.0
    return {
        "D1": s * delta_mass,
        "D2": s * pdf / (sig * sq),
        "vega": s * pdf * sq,
        "vanna_d1": -s * pdf * d2 / sig,
    }
