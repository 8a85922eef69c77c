"""Model, group, and experiment parameters, plus config-file ingestion.

The configuration format is flat ``key = value`` text with ``#`` comments
and sections [group], [grid], [payoff], [run], [full_model].  Parameters
are validated on construction and immutable afterwards, so a loaded config
can be shared freely across workers.
"""

import math
from dataclasses import dataclass

import numpy as np

from .payoffs import PayoffDescriptor


@dataclass(frozen=True)
class MarketGroupParams:
    """Calibrated group coefficients driving the first-order correction,
    plus the effective volatility and risk-free rate."""

    v0_delta: float
    v1_delta: float
    v3_eps: float
    sigma_bar: float
    r: float

    def __post_init__(self):
        for name in ("v0_delta", "v1_delta", "v3_eps", "sigma_bar", "r"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sigma_bar <= 0.0:
            raise ValueError("sigma_bar must be positive")


@dataclass(frozen=True)
class MonitoringGrid:
    """Monitoring dates 0 < t_1 < ... < t_n = T, in year fractions."""

    times: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) < 1:
            raise ValueError("grid must contain at least one date")
        if any(not math.isfinite(t) for t in times):
            raise ValueError("grid dates must be finite")
        previous = 0.0
        for t in times:
            if t <= previous:
                raise ValueError("grid not increasing")
            previous = t
        object.__setattr__(self, "times", times)

    @property
    def n(self):
        return len(self.times)

    @property
    def maturity(self):
        return self.times[-1]

    def dts(self):
        """Interval lengths t_{j+1} - t_j with t_0 = 0, recomputed from
        adjacent differences (supports non-uniform grids)."""
        t = np.asarray(self.times)
        out = np.empty(len(self.times))
        out[0] = t[0]
        out[1:] = t[1:] - t[:-1]
        return out


def uniform_grid(n, maturity):
    """The equally-spaced grid t_i = i*maturity/n, i = 1..n."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (math.isfinite(maturity) and maturity > 0.0):
        raise ValueError("maturity must be positive and finite")
    return MonitoringGrid(times=tuple((i * maturity) / n for i in range(1, n + 1)))


def correlation_cholesky(rho_sy, rho_sz, rho_yz):
    """Lower-triangular factor L with L L^T = the 3x3 correlation matrix
    {{1, rho_sy, rho_sz}, {rho_sy, 1, rho_yz}, {rho_sz, rho_yz, 1}}.

    Raises ValueError when the matrix is not positive semidefinite.
    Semidefinite boundary cases (|rho| = 1) are accepted with the
    corresponding diagonal entry collapsed to zero.
    """
    tol = 1e-12
    for name, rho in (("rho_sy", rho_sy), ("rho_sz", rho_sz), ("rho_yz", rho_yz)):
        if not (math.isfinite(rho) and -1.0 <= rho <= 1.0):
            raise ValueError(f"{name} must lie in [-1, 1]")
    a = 1.0 - rho_sy * rho_sy
    l11 = math.sqrt(max(a, 0.0))
    l21_num = rho_yz - rho_sy * rho_sz
    if l11 == 0.0:
        if abs(l21_num) > tol:
            raise ValueError("correlation matrix not positive semidefinite")
        l21 = 0.0
    else:
        l21 = l21_num / l11
    b = 1.0 - rho_sz * rho_sz - l21 * l21
    if b < -tol:
        raise ValueError("correlation matrix not positive semidefinite")
    l22 = math.sqrt(max(b, 0.0))
    return np.array([
        [1.0, 0.0, 0.0],
        [rho_sy, l11, 0.0],
        [rho_sz, l21, l22],
    ])


@dataclass(frozen=True)
class FullModelParams:
    """Two-factor stochastic volatility model parameters: fast scale eps,
    slow scale delta, OU levels m1/m2, vol-of-vol nu1/nu2, Brownian
    correlations, base volatility sigma in f(y, z) = sigma*exp(y + z),
    and initial states."""

    eps: float
    delta: float
    m1: float
    m2: float
    nu1: float
    nu2: float
    rho_sy: float
    rho_sz: float
    rho_yz: float
    sigma: float
    y0: float
    z0: float
    s0: float

    def __post_init__(self):
        for name in ("eps", "delta", "sigma", "s0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be positive")
        for name in ("m1", "m2", "y0", "z0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("nu1", "nu2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be nonnegative")
        # raises when the implied correlation matrix is not PSD
        correlation_cholesky(self.rho_sy, self.rho_sz, self.rho_yz)

    def cholesky(self):
        return correlation_cholesky(self.rho_sy, self.rho_sz, self.rho_yz)


@dataclass(frozen=True)
class PricingConfig:
    group: MarketGroupParams
    grid: MonitoringGrid
    s0: float
    payoffs: tuple
    n_paths: int
    seed: int
    substeps_per_interval: int = 10
    full_model: FullModelParams = None

    def __post_init__(self):
        if not (math.isfinite(self.s0) and self.s0 > 0.0):
            raise ValueError("s0 must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.substeps_per_interval < 1:
            raise ValueError("substeps_per_interval must be at least 1")
        payoffs = tuple(self.payoffs)
        if len(payoffs) == 0:
            raise ValueError("at least one payoff required")
        object.__setattr__(self, "payoffs", payoffs)
        if self.full_model is not None and self.full_model.s0 != self.s0:
            raise ValueError("full_model s0 must match run s0")


# ---------------------------------------------------------------------------
# Config-file parsing


_SECTION_KEYS = {
    "group": {"v0_delta", "v1_delta", "v3_eps", "sigma_bar", "r"},
    "grid": {"n", "maturity", "times"},
    "payoff": {"payoff", "strike", "barrier"},
    "run": {"s0", "n_paths", "seed", "substeps_per_interval"},
    "full_model": {
        "eps", "delta", "m1", "m2", "nu1", "nu2",
        "rho_sy", "rho_sz", "rho_yz", "sigma", "y0", "z0",
    },
}

# payoffs selectable from a config file ('constant' needs a level, which the
# flat format does not carry; it stays a library-level payoff)
CONFIG_PAYOFFS = (
    "asian_call", "up_and_out_call", "european_call", "european_put", "forward",
)


def _parse_lines(text):
    """Raw sections -> {key: (value string, line number)}; the payoff key
    may repeat and collects a list."""
    sections = {name: {} for name in _SECTION_KEYS}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ValueError(f"parse error at line {lineno}: unterminated section header")
            name = line[1:-1].strip()
            if name not in _SECTION_KEYS:
                raise ValueError(f"parse error at line {lineno}: unknown section [{name}]")
            current = name
            continue
        if "=" not in line:
            raise ValueError(f"parse error at line {lineno}: expected key = value")
        if current is None:
            raise ValueError(f"parse error at line {lineno}: key outside any section")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SECTION_KEYS[current]:
            raise ValueError(
                f"parse error at line {lineno}: unknown key '{key}' in [{current}]"
            )
        if not value:
            raise ValueError(f"parse error at line {lineno}: empty value for '{key}'")
        bucket = sections[current]
        if key == "payoff":
            bucket.setdefault("payoff", ([], lineno))[0].append(value)
        elif key in bucket:
            raise ValueError(f"parse error at line {lineno}: duplicate key '{key}'")
        else:
            bucket[key] = (value, lineno)
    return sections


def _real(sections, section, key, required=True):
    entry = sections[section].get(key)
    if entry is None:
        if required:
            raise ValueError(f"{key} required")
        return None
    value, lineno = entry
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"parse error at line {lineno}: '{key}' is not a number") from None


def _count(sections, section, key, required=True):
    entry = sections[section].get(key)
    if entry is None:
        if required:
            raise ValueError(f"{key} required")
        return None
    value, lineno = entry
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"parse error at line {lineno}: '{key}' is not an integer") from None


def load_config(text):
    """Parse and validate a configuration document into a PricingConfig."""
    sections = _parse_lines(text)

    group = MarketGroupParams(
        v0_delta=_real(sections, "group", "v0_delta"),
        v1_delta=_real(sections, "group", "v1_delta"),
        v3_eps=_real(sections, "group", "v3_eps"),
        sigma_bar=_real(sections, "group", "sigma_bar"),
        r=_real(sections, "group", "r"),
    )

    times_entry = sections["grid"].get("times")
    if times_entry is not None:
        if "n" in sections["grid"] or "maturity" in sections["grid"]:
            raise ValueError("grid accepts either times or n and maturity, not both")
        value, lineno = times_entry
        try:
            times = tuple(float(part) for part in value.split(",") if part.strip())
        except ValueError:
            raise ValueError(
                f"parse error at line {lineno}: 'times' is not a comma-separated list of numbers"
            ) from None
        grid = MonitoringGrid(times=times)
    else:
        grid = uniform_grid(
            n=_count(sections, "grid", "n"),
            maturity=_real(sections, "grid", "maturity"),
        )

    payoff_entry = sections["payoff"].get("payoff")
    if payoff_entry is None:
        raise ValueError("payoff required")
    kinds = payoff_entry[0]
    strike = _real(sections, "payoff", "strike")
    barrier = _real(sections, "payoff", "barrier", required=False)
    descriptors = []
    for kind in kinds:
        if kind not in CONFIG_PAYOFFS:
            raise ValueError(
                f"unknown payoff '{kind}'; valid payoffs: {', '.join(CONFIG_PAYOFFS)}"
            )
        if kind == "up_and_out_call":
            if barrier is None:
                raise ValueError("barrier required")
            descriptors.append(
                PayoffDescriptor(kind=kind, strike=strike, barrier=barrier)
            )
        else:
            descriptors.append(PayoffDescriptor(kind=kind, strike=strike))

    s0 = _real(sections, "run", "s0")
    n_paths = _count(sections, "run", "n_paths")
    seed = _count(sections, "run", "seed")
    substeps = _count(sections, "run", "substeps_per_interval", required=False)
    if substeps is None:
        substeps = 10

    full_model = None
    if sections["full_model"]:
        full_model = FullModelParams(
            eps=_real(sections, "full_model", "eps"),
            delta=_real(sections, "full_model", "delta"),
            m1=_real(sections, "full_model", "m1"),
            m2=_real(sections, "full_model", "m2"),
            nu1=_real(sections, "full_model", "nu1"),
            nu2=_real(sections, "full_model", "nu2"),
            rho_sy=_real(sections, "full_model", "rho_sy"),
            rho_sz=_real(sections, "full_model", "rho_sz"),
            rho_yz=_real(sections, "full_model", "rho_yz"),
            sigma=_real(sections, "full_model", "sigma"),
            y0=_real(sections, "full_model", "y0"),
            z0=_real(sections, "full_model", "z0"),
            s0=s0,
        )

    return PricingConfig(
        group=group,
        grid=grid,
        s0=s0,
        payoffs=tuple(descriptors),
        n_paths=n_paths,
        seed=seed,
        substeps_per_interval=substeps,
        full_model=full_model,
    )


def _fmt(x):
    """17-significant-digit decimal: parses back to the same float64."""
    return f"{x:.17g}"


def emit_config(cfg):
    """Serialize a PricingConfig to the flat config format, losslessly.

    load_config(emit_config(cfg)) reproduces every field bit-exactly.
    Only configs expressible in the format can be emitted: all payoffs must
    be config-selectable kinds sharing one strike (and barrier).
    """
    strikes = {d.strike for d in cfg.payoffs}
    barriers = {d.barrier for d in cfg.payoffs if d.barrier is not None}
    for d in cfg.payoffs:
        if d.kind not in CONFIG_PAYOFFS or d.monitoring_subset is not None:
            raise ValueError(f"payoff '{d.kind}' is not representable in config format")
    if len(strikes) != 1 or len(barriers) > 1:
        raise ValueError("config format carries a single strike and barrier")

    lines = ["[group]"]
    g = cfg.group
    lines += [
        f"v0_delta = {_fmt(g.v0_delta)}",
        f"v1_delta = {_fmt(g.v1_delta)}",
        f"v3_eps = {_fmt(g.v3_eps)}",
        f"sigma_bar = {_fmt(g.sigma_bar)}",
        f"r = {_fmt(g.r)}",
        "",
        "[grid]",
        "times = " + ", ".join(_fmt(t) for t in cfg.grid.times),
        "",
        "[payoff]",
    ]
    lines += [f"payoff = {d.kind}" for d in cfg.payoffs]
    lines.append(f"strike = {_fmt(strikes.pop())}")
    if barriers:
        lines.append(f"barrier = {_fmt(barriers.pop())}")
    lines += [
        "",
        "[run]",
        f"s0 = {_fmt(cfg.s0)}",
        f"n_paths = {cfg.n_paths}",
        f"seed = {cfg.seed}",
        f"substeps_per_interval = {cfg.substeps_per_interval}",
    ]
    if cfg.full_model is not None:
        fm = cfg.full_model
        lines += ["", "[full_model]"]
        lines += [
            f"{name} = {_fmt(getattr(fm, name))}"
            for name in (
                "eps", "delta", "m1", "m2", "nu1", "nu2",
                "rho_sy", "rho_sz", "rho_yz", "sigma", "y0", "z0",
            )
        ]
    return "\n".join(lines) + "\n"
