"""Black-Scholes oracle checks: frozen high-precision reference values,
analytic identities across a parameter lattice, and finite differences."""

import math
import itertools

import numpy as np
import pytest
from scipy.special import ndtr

from mssv.black_scholes import BsInputs, bs_greeks, bs_price, norm_cdf

# Reference point used throughout the suite, evaluated before the build with
# 40-digit arithmetic (S=100, K=100, r=0.02, vol=0.2020, tau=0.5).
ATM = BsInputs(spot=100.0, strike=100.0, rate=0.02, vol=0.2020, tau=0.5)
ATM_CALL = 6.176511675314362163655
ATM_PUT = 5.181495050231167521046
ATM_D1 = 55.62342232345229773972
ATM_D2 = 276.5224011562886797097
ATM_VEGA = 27.92876251678515665068
ATM_VANNA_D1 = 0.2751534783782872506022


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


_LATTICE = [
    BsInputs(spot=s, strike=k, rate=0.02, vol=sig, tau=tau)
    for s, k, sig, tau in itertools.product(
        (80.0, 95.0, 100.0, 110.0, 130.0),
        (70.0, 100.0, 125.0),
        (0.1, 0.2020, 0.35, 0.6),
        (0.1, 0.5, 1.0, 2.0),
    )
]


def test_frozen_reference_point():
    assert _rel(bs_price(ATM, "call"), ATM_CALL) < 1e-12
    assert _rel(bs_price(ATM, "put"), ATM_PUT) < 1e-12
    g = bs_greeks(ATM, "call")
    assert _rel(g["D1"], ATM_D1) < 1e-12
    assert _rel(g["D2"], ATM_D2) < 1e-12
    assert _rel(g["vega"], ATM_VEGA) < 1e-12
    assert _rel(g["vanna_d1"], ATM_VANNA_D1) < 1e-12


def test_zero_strike():
    z = BsInputs(spot=87.5, strike=0.0, rate=0.03, vol=0.4, tau=2.0)
    assert bs_price(z, "call") == 87.5
    assert bs_price(z, "put") == 0.0
    g = bs_greeks(z, "call")
    assert g == {"D1": 87.5, "D2": 0.0, "vega": 0.0, "vanna_d1": 0.0}
    assert bs_greeks(z, "put")["D1"] == 0.0


def test_large_vol_limit():
    # vol * sqrt(tau) = 50: the call converges to the spot
    big = BsInputs(spot=100.0, strike=100.0, rate=0.02, vol=50.0, tau=1.0)
    assert _rel(bs_price(big, "call"), 100.0) < 1e-9


def test_deep_itm_delta_limit():
    deep = BsInputs(spot=200.0, strike=100.0, rate=0.02, vol=0.2020, tau=0.5)
    assert _rel(bs_greeks(deep, "call")["D1"], 200.0) < 1e-6


def test_put_call_parity_lattice():
    for inp in _LATTICE:
        lhs = bs_price(inp, "call") - bs_price(inp, "put")
        rhs = inp.spot - inp.strike * math.exp(-inp.rate * inp.tau)
        assert abs(lhs - rhs) <= 1e-12 * max(inp.spot, inp.strike)


def test_vega_gamma_identity_lattice():
    assert len(_LATTICE) >= 100
    for inp in _LATTICE:
        g = bs_greeks(inp, "call")
        assert _rel(g["vega"], inp.vol * inp.tau * g["D2"]) < 1e-10


@pytest.mark.parametrize("kind", ["call", "put"])
def test_greeks_vs_finite_differences(kind):
    inp = BsInputs(spot=120.0, strike=100.0, rate=0.02, vol=0.2, tau=1.0)
    g = bs_greeks(inp, kind)

    def price(spot_mul=1.0, vol_mul=1.0):
        bumped = BsInputs(
            spot=inp.spot * spot_mul,
            strike=inp.strike,
            rate=inp.rate,
            vol=inp.vol * vol_mul,
            tau=inp.tau,
        )
        return bs_price(bumped, kind)

    h = 1e-5
    # first and second log-spot differences (D1 = dP/dlogS, D2 = d2 - d1)
    p0, pp, pm = price(), price(spot_mul=math.exp(h)), price(spot_mul=math.exp(-h))
    d1_fd = (pp - pm) / (2 * h)
    d2_fd = (pp - 2 * p0 + pm) / (h * h) - d1_fd
    vega_fd = (price(vol_mul=1 + h) - price(vol_mul=1 - h)) / (2 * h * inp.vol)
    assert _rel(d1_fd, g["D1"]) < 1e-6
    assert _rel(d2_fd, g["D2"]) < 1e-6
    assert _rel(vega_fd, g["vega"]) < 1e-6

    # the mixed spot-vol difference needs a wider step: at 1e-5 its roundoff
    # floor (~eps*P/(4*h*h_sig) ~ 1e-4) would swamp the 1e-6 target
    hm = 1e-4
    vanna_fd = (
        price(math.exp(hm), 1 + hm)
        - price(math.exp(hm), 1 - hm)
        - price(math.exp(-hm), 1 + hm)
        + price(math.exp(-hm), 1 - hm)
    ) / (4 * hm * hm * inp.vol)
    assert _rel(vanna_fd, g["vanna_d1"]) < 1e-6


def test_norm_cdf_accuracy():
    # absolute accuracy at the 1e-15 level everywhere; relative agreement in
    # the working range (far-tail relative error of either library is ~1e-14
    # at magnitudes ~1e-33, irrelevant at double precision)
    x = np.linspace(-12.0, 12.0, 4001)
    mine = np.array([norm_cdf(v) for v in x])
    ref = ndtr(x)
    assert np.max(np.abs(mine - ref)) < 1e-15
    bulk = np.abs(x) <= 6.0
    rel = np.abs(mine[bulk] - ref[bulk]) / ref[bulk]
    assert rel.max() < 1e-14


def test_input_validation():
    with pytest.raises(ValueError):
        BsInputs(spot=-1.0, strike=100.0, rate=0.0, vol=0.2, tau=1.0)
    with pytest.raises(ValueError):
        BsInputs(spot=100.0, strike=-5.0, rate=0.0, vol=0.2, tau=1.0)
    with pytest.raises(ValueError):
        BsInputs(spot=100.0, strike=100.0, rate=0.0, vol=0.0, tau=1.0)
    with pytest.raises(ValueError):
        BsInputs(spot=100.0, strike=100.0, rate=0.0, vol=0.2, tau=0.0)
    with pytest.raises(ValueError):
        bs_price(ATM, "straddle")
