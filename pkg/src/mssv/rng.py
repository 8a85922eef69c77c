"""Counter-based random number generation for reproducible Monte Carlo.

Every random draw is addressed by (path index, cell index, domain tag) and
produced by a Philox4x64-10 block cipher keyed by the run seed.  A draw is
therefore a pure function of (seed, path, cell) — independent of worker
count, scheduling, and batch partitioning — which is what makes bitwise
reproducibility across parallelism degrees possible.

Normals are obtained by inverting the standard normal CDF on the uniform
output (monotone, no rejection-loop state).  The inverse CDF is evaluated
with two Chebyshev expansions whose coefficients were fit against
arbitrary-precision quantiles; measured accuracy is ~3.5e-16 ulp-scale
(max scaled error 3.5e-15 over 5.8e5 adversarial points).
"""

import math

import numpy as np
from numba import njit

# Philox4x64 round multipliers and Weyl key increments (Salmon et al. 2011).
PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)

# Pre-split multiplier limbs for the 64x64 -> 128 bit high product.
_M0_HI = np.uint64(int(PHILOX_M0) >> 32)
_M0_LO = np.uint64(int(PHILOX_M0) & 0xFFFFFFFF)
_M1_HI = np.uint64(int(PHILOX_M1) >> 32)
_M1_LO = np.uint64(int(PHILOX_M1) & 0xFFFFFFFF)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S12 = np.uint64(12)
_S2 = np.uint64(2)
_W3 = np.uint64(3)
_U0 = np.uint64(0)

# Domain tags keep the Black-Scholes engine and the full-model simulator on
# disjoint counter subspaces of the same keyed generator, so their draws are
# independent streams for any seed.
TAG_GBM = np.uint64(0)
TAG_FULL_MODEL = np.uint64(1)

_TWO_NEG52 = 2.0 ** -52

# Uniform draws live on the lattice (k + 1/2) * 2^-52, k = word >> 12: every
# value is exactly representable and lies strictly inside (0, 1), so the
# inverse CDF below is evaluated only on [2^-53, 1 - 2^-53] (|z| <= 8.2096).
UNIFORM_LOW = 2.0 ** -53
UNIFORM_HIGH = 1.0 - 2.0 ** -53


@njit(inline="always", cache=True)
def _philox_round(c0, c1, c2, c3, k0, k1):
    a_h = c0 >> _S32
    a_l = c0 & _LO32
    t0 = _M0_LO * a_l
    t1 = _M0_HI * a_l
    t2 = _M0_LO * a_h
    t3 = _M0_HI * a_h
    hi0 = t3 + (t1 >> _S32) + (t2 >> _S32) + (
        ((t0 >> _S32) + (t1 & _LO32) + (t2 & _LO32)) >> _S32
    )
    lo0 = PHILOX_M0 * c0
    b_h = c2 >> _S32
    b_l = c2 & _LO32
    u0 = _M1_LO * b_l
    u1 = _M1_HI * b_l
    u2 = _M1_LO * b_h
    u3 = _M1_HI * b_h
    hi1 = u3 + (u1 >> _S32) + (u2 >> _S32) + (
        ((u0 >> _S32) + (u1 & _LO32) + (u2 & _LO32)) >> _S32
    )
    lo1 = PHILOX_M1 * c2
    return hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0


@njit(inline="always", cache=True)
def _philox(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        c0, c1, c2, c3 = _philox_round(c0, c1, c2, c3, k0, k1)
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    return c0, c1, c2, c3


@njit(inline="always", cache=True)
def _uniform(word):
    return (np.float64(word >> _S12) + 0.5) * _TWO_NEG52


# Inverse normal CDF, two Chebyshev branches (coefficients fit against
# arbitrary-precision normal quantiles; see module docstring).
#
# central: x = s * C_cen(s^2),       s = u - 1/2, s^2 in [0, 0.1764]
# tail:    x = C_tail(1/t) - t,      t = sqrt(-2 ln q), q = min(u, 1-u) < 0.08
_CEN = np.array([
    2.8591061950198626,
    0.40604933483288047,
    0.06395642928201956,
    0.012644438815119664,
    0.0027849944426489898,
    0.000653254038534576,
    0.00015966164583017427,
    4.0168800951257736e-05,
    1.0325147462270924e-05,
    2.6982665868864646e-06,
    7.144544422642023e-07,
    1.912047881526378e-07,
    5.1625449658182394e-08,
    1.404311335385954e-08,
    3.844356785271782e-09,
    1.0582003933437407e-09,
    2.926783197361964e-10,
    8.129107016898044e-11,
    2.2662582506278072e-11,
    6.339391531440334e-12,
    1.7781921348462967e-12,
    5.003195339002708e-13,
    1.4057467255406123e-13,
    4.0047160988768846e-14,
    1.0936209794255789e-14,
    3.463252653627234e-15,
    5.376229320165566e-16,
    5.066383893597526e-16,
    -5.941152044413957e-16,
])
_TAIL = np.array([
    0.6213776729763618,
    0.23969209005901485,
    -0.02091435129552781,
    0.002692860931022982,
    -0.00044757269855120714,
    8.809306691754742e-05,
    -1.9240930474169535e-05,
    4.487756450665724e-06,
    -1.0958603867378585e-06,
    2.771988979944842e-07,
    -7.214008871688433e-08,
    1.9216509030206272e-08,
    -5.217911891428595e-09,
    1.4395362823081974e-09,
    -4.024777287789426e-10,
    1.1381327587860898e-10,
    -3.2500890155506415e-11,
    9.361342977638371e-12,
    -2.7160985079976568e-12,
    7.937741668280481e-13,
    -2.330351177862443e-13,
    6.91544260270327e-14,
    -2.039986658779963e-14,
    6.1455832646180534e-15,
    -1.7819096063237834e-15,
    5.4753705068918e-16,
    -1.829286001219129e-16,
])
_N_CEN = _CEN.shape[0]
_N_TAIL = _TAIL.shape[0]

# Affine maps from each branch's argument to the Chebyshev domain [-1, 1].
_CEN_R_MAX = 0.1764  # = 0.42^2; q >= 0.08 <=> |u - 1/2| <= 0.42
_CEN_A = 2.0 / _CEN_R_MAX
_CEN_B = -1.0
_TAIL_W_LO = 0.11452252818824311  # 1/t at q = 2^-55
_TAIL_W_HI = 0.44492996695475345  # 1/t at q = 0.08
_TAIL_A = 2.0 / (_TAIL_W_HI - _TAIL_W_LO)
_TAIL_B = -1.0 - 2.0 * _TAIL_W_LO / (_TAIL_W_HI - _TAIL_W_LO)


@njit(inline="always", cache=True)
def _clenshaw_cen(xi):
    b1 = 0.0
    b2 = 0.0
    x2 = 2.0 * xi
    for i in range(_N_CEN - 1, 0, -1):
        b1, b2 = x2 * b1 - b2 + _CEN[i], b1
    return xi * b1 - b2 + _CEN[0]


@njit(inline="always", cache=True)
def _clenshaw_tail(xi):
    b1 = 0.0
    b2 = 0.0
    x2 = 2.0 * xi
    for i in range(_N_TAIL - 1, 0, -1):
        b1, b2 = x2 * b1 - b2 + _TAIL[i], b1
    return xi * b1 - b2 + _TAIL[0]


@njit(inline="always", cache=True)
def _inv_norm(u):
    q = u if u < 0.5 else 1.0 - u
    if q >= 0.08:
        s = u - 0.5
        return s * _clenshaw_cen((s * s) * _CEN_A + _CEN_B)
    t = math.sqrt(-2.0 * math.log(q))
    x = _clenshaw_tail((1.0 / t) * _TAIL_A + _TAIL_B) - t
    return x if u < 0.5 else -x


@njit(inline="always", cache=True)
def _normal_at(path, cell, tag, k0, k1):
    block = cell >> _S2
    word = cell & _W3
    r0, r1, r2, r3 = _philox(path, block, tag, _U0, k0, k1)
    if word == _U0:
        w = r0
    elif word == np.uint64(1):
        w = r1
    elif word == np.uint64(2):
        w = r2
    else:
        w = r3
    return _inv_norm(_uniform(w))


# ---------------------------------------------------------------------------
# Python-facing wrappers (used by tests and by callers outside the kernels).


@njit(cache=True)
def philox_blocks(c0s, c1s, c2, c3, k0, k1):
    """Raw Philox4x64-10 blocks at counters (c0s[i], c1s[i], c2, c3)."""
    out = np.empty((c0s.shape[0], 4), dtype=np.uint64)
    for i in range(c0s.shape[0]):
        r0, r1, r2, r3 = _philox(c0s[i], c1s[i], c2, c3, k0, k1)
        out[i, 0] = r0
        out[i, 1] = r1
        out[i, 2] = r2
        out[i, 3] = r3
    return out


@njit(cache=True)
def word_to_uniform(word):
    """Uniform in (0, 1) from one 64-bit generator word."""
    return _uniform(word)


@njit(cache=True)
def _inverse_normal_cdf_array(u, out):
    for i in range(u.shape[0]):
        out[i] = _inv_norm(u[i])


def inverse_normal_cdf(u):
    """Standard normal quantile of ``u`` (scalar or array), u in (0, 1)."""
    arr = np.atleast_1d(np.asarray(u, dtype=np.float64))
    out = np.empty_like(arr)
    _inverse_normal_cdf_array(arr.ravel(), out.ravel())
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(out[0])
    return out.reshape(np.shape(u))


@njit(cache=True, nogil=True)
def _normal_lattice_kernel(paths, cells, tag, k0, k1, out):
    for i in range(paths.shape[0]):
        out[i] = _normal_at(paths[i], cells[i], tag, k0, k1)


def normal_lattice(seed, tag, path_indices, cell_indices):
    """Standard normals addressed by (seed, tag, path, cell), elementwise.

    Cell c maps to word c & 3 of the Philox block at counter
    (path, c >> 2, tag, 0) with key (seed, 0).
    """
    paths = np.ascontiguousarray(path_indices, dtype=np.uint64)
    cells = np.ascontiguousarray(cell_indices, dtype=np.uint64)
    if paths.shape != cells.shape:
        raise ValueError("path and cell index arrays must have equal shape")
    out = np.empty(paths.size, dtype=np.float64)
    _normal_lattice_kernel(
        paths.ravel(), cells.ravel(), np.uint64(tag), np.uint64(seed), _U0, out
    )
    return out.reshape(paths.shape)
