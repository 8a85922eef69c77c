"""Command-line pricing front end.

Subcommands:
  price        price every configured payoff from one path batch
  convergence  estimator series over increasing path-count prefixes
  greeks       single-date Greek estimates beside analytic values
  full-model   prices under the two-factor reference volatility model

All results go to stdout with 17-significant-digit decimals, so repeated
runs with the same config and seed are byte-identical; timing and file
notices go to stderr. Exit codes: 0 success, 1 runtime or resource
failure, 2 usage or configuration error.
"""

import argparse
import dataclasses
import math
import re
import sys
import time

from .black_scholes import BsInputs, bs_greeks
from .config import CONFIG_PAYOFFS, load_config
from .full_model import discounted_samples, price_full, simulate_full
from .paths import MemoryBudgetError, simulate_batch
from .pricing import (
    convergence,
    greek_estimates,
    price_corrected,
    price_zero_order,
    write_convergence_csv,
)
from .weights import batch_weights, write_diagnostics

GREEK_KEYS = ("D1", "D2", "dSigma", "D1dSigma")


class UsageError(ValueError):
    """Bad flags or configuration; reported with exit status 2."""


def _fmt(x):
    return "%.17g" % x


def _describe(payoff):
    parts = [payoff.kind]
    if payoff.kind == "constant":
        parts.append("level=" + _fmt(payoff.level))
    else:
        parts.append("strike=" + _fmt(payoff.strike))
    if payoff.barrier is not None:
        parts.append("barrier=" + _fmt(payoff.barrier))
    if payoff.monitoring_subset is not None:
        parts.append("dates=" + ",".join(str(i) for i in payoff.monitoring_subset))
    return " ".join(parts)


def _estimate_line(label, est):
    return "  %-10s mean=%s stderr=%s ci95=[%s,%s]" % (
        label, _fmt(est.mean), _fmt(est.stderr),
        _fmt(est.ci95_low), _fmt(est.ci95_high))


def _load(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError("cannot read config %s: %s" % (path, exc)) from exc
    try:
        return load_config(text)
    except ValueError as exc:
        raise UsageError("%s: %s" % (path, exc)) from exc


def _apply_overrides(cfg, args):
    changes = {}
    if args.paths is not None:
        changes["n_paths"] = args.paths
    if args.seed is not None:
        changes["seed"] = args.seed
    if not changes:
        return cfg
    try:
        return dataclasses.replace(cfg, **changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _select_payoffs(cfg, names):
    if not names:
        return cfg.payoffs
    chosen = []
    for name in names:
        if name not in CONFIG_PAYOFFS:
            raise UsageError("unknown payoff '%s'; valid payoffs: %s"
                             % (name, ", ".join(CONFIG_PAYOFFS)))
        matches = [p for p in cfg.payoffs if p.kind == name]
        if not matches:
            raise UsageError("payoff '%s' is not in the config" % name)
        chosen.extend(m for m in matches if m not in chosen)
    return tuple(chosen)


def _require_full_model(cfg):
    if cfg.full_model is None:
        raise UsageError("config has no [full_model] section")
    return cfg.full_model


def _print_header(cfg, path, out):
    print("config " + path, file=out)
    print("grid n=%d maturity=%s" % (cfg.grid.n, _fmt(cfg.grid.maturity)),
          file=out)
    print("paths %d" % cfg.n_paths, file=out)
    print("seed %d" % cfg.seed, file=out)


def parse_checkpoints(spec):
    """Checkpoint counts from a comma list ('1000,5000') or a geometric
    spec 'start:stop:xfactor' (e.g. '1e3:1e6:x10')."""
    text = spec.strip()
    geometric = re.fullmatch(r"([^:,]+):([^:,]+):x([^:,]+)", text)
    if geometric:
        try:
            start, stop, factor = (float(g) for g in geometric.groups())
        except ValueError as exc:
            raise UsageError("malformed checkpoint spec '%s'" % spec) from exc
        if not (start >= 1.0 and stop >= start and factor > 1.0):
            raise UsageError(
                "checkpoint spec needs 1 <= start <= stop and factor > 1: '%s'"
                % spec)
        counts = []
        value = start
        while value <= stop * (1.0 + 1e-12):
            counts.append(int(round(value)))
            value *= factor
        return counts
    try:
        counts = [int(float(p)) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError("malformed checkpoint spec '%s'" % spec) from exc
    if not counts:
        raise UsageError("malformed checkpoint spec '%s'" % spec)
    return counts


def default_checkpoints(n_paths):
    """Powers of ten from 1000 up to and including the batch size."""
    counts = []
    value = 1000
    while value < n_paths:
        counts.append(value)
        value *= 10
    counts.append(n_paths)
    return counts


def cmd_price(args, out=None):
    out = sys.stdout if out is None else out
    cfg = _apply_overrides(_load(args.config), args)
    payoffs = _select_payoffs(cfg, args.payoff)
    full_params = _require_full_model(cfg) if args.full_model else None
    batch = simulate_batch(cfg, workers=args.workers)
    weights = batch_weights(batch, cfg.group, workers=args.workers)
    T = batch.grid.times[-1]
    full_batch = None
    if full_params is not None:
        full_batch = simulate_full(
            full_params, cfg.grid, cfg.substeps_per_interval,
            cfg.n_paths, cfg.seed, cfg.group.r, workers=args.workers)
    if args.diagnostics:
        write_diagnostics(batch, cfg.group, args.diagnostics)
        print("diagnostics written to " + args.diagnostics, file=sys.stderr)
    _print_header(cfg, args.config, out)
    rows = []
    for payoff in payoffs:
        ests = [
            ("zero_order", price_zero_order(batch, payoff, cfg.group.r, T)),
            ("corrected", price_corrected(batch, weights, payoff,
                                          cfg.group.r, T)),
        ]
        if full_batch is not None:
            ests.append(("full_model",
                         price_full(full_batch, payoff, cfg.group.r, T)))
        rows.append((payoff, ests))
        print("payoff " + _describe(payoff), file=out)
        for label, est in ests:
            print(_estimate_line(label, est), file=out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("payoff,estimator,mean,stderr,ci95_low,ci95_high\n")
            for payoff, ests in rows:
                for label, est in ests:
                    fh.write(",".join([
                        _describe(payoff), label, _fmt(est.mean),
                        _fmt(est.stderr), _fmt(est.ci95_low),
                        _fmt(est.ci95_high)]) + "\n")
        print("estimates written to " + args.out, file=sys.stderr)
    return 0


def cmd_convergence(args, out=None):
    out = sys.stdout if out is None else out
    cfg = _apply_overrides(_load(args.config), args)
    payoff = _select_payoffs(cfg, args.payoff)[0]
    counts = (parse_checkpoints(args.checkpoints) if args.checkpoints
              else default_checkpoints(cfg.n_paths))
    full_params = _require_full_model(cfg) if args.full_model else None
    batch = simulate_batch(cfg, workers=args.workers)
    weights = batch_weights(batch, cfg.group, workers=args.workers)
    full_samples = None
    if full_params is not None:
        full_batch = simulate_full(
            full_params, cfg.grid, cfg.substeps_per_interval,
            cfg.n_paths, cfg.seed, cfg.group.r, workers=args.workers)
        full_samples = discounted_samples(full_batch, payoff, cfg.group.r,
                                          batch.grid.times[-1])
    series = convergence(batch, weights, payoff, counts,
                         full_samples=full_samples)
    if args.out:
        write_convergence_csv(series, args.out)
        print("series written to " + args.out, file=sys.stderr)
    else:
        write_convergence_csv(series, out)
    if args.plot:
        from .report import render_convergence

        render_convergence(series, args.plot, label=_describe(payoff))
        print("plot written to " + args.plot, file=sys.stderr)
    return 0


def _analytic_greeks(payoff, cfg, tau):
    """Closed-form Greek values where available; None otherwise.

    A single-date average is the terminal level itself, so the asian
    call shares the european call's closed form on a one-date grid.
    """
    if payoff.kind == "constant":
        return dict.fromkeys(GREEK_KEYS, 0.0)
    if payoff.kind == "forward":
        return {"D1": cfg.s0, "D2": 0.0, "dSigma": 0.0, "D1dSigma": 0.0}
    option = {"european_call": "call", "european_put": "put",
              "asian_call": "call"}.get(payoff.kind)
    if option is None:
        return None
    g = bs_greeks(BsInputs(spot=cfg.s0, strike=payoff.strike,
                           rate=cfg.group.r, vol=cfg.group.sigma_bar,
                           tau=tau), option)
    return {"D1": g["D1"], "D2": g["D2"], "dSigma": g["vega"],
            "D1dSigma": g["vanna_d1"]}


def cmd_greeks(args, out=None):
    out = sys.stdout if out is None else out
    cfg = _apply_overrides(_load(args.config), args)
    if cfg.grid.n != 1:
        raise UsageError(
            "greeks requires a single-date grid (config has n=%d)"
            % cfg.grid.n)
    payoffs = _select_payoffs(cfg, args.payoff)
    batch = simulate_batch(cfg, workers=args.workers)
    tau = cfg.grid.maturity
    _print_header(cfg, args.config, out)
    for payoff in payoffs:
        ests = greek_estimates(batch, payoff, cfg.group.sigma_bar,
                               cfg.group.r, tau)
        analytic = _analytic_greeks(payoff, cfg, tau)
        print("payoff " + _describe(payoff), file=out)
        for key in GREEK_KEYS:
            est = ests[key]
            line = "  %-8s estimate=%s stderr=%s" % (
                key, _fmt(est.mean), _fmt(est.stderr))
            if analytic is not None:
                ref = analytic[key]
                if est.stderr > 0.0:
                    z = (est.mean - ref) / est.stderr
                else:
                    z = 0.0 if est.mean == ref else math.inf
                line += " analytic=%s z=%s" % (_fmt(ref), _fmt(z))
            print(line, file=out)
    return 0


def cmd_full_model(args, out=None):
    out = sys.stdout if out is None else out
    cfg = _apply_overrides(_load(args.config), args)
    full_params = _require_full_model(cfg)
    payoffs = _select_payoffs(cfg, args.payoff)
    full_batch = simulate_full(
        full_params, cfg.grid, cfg.substeps_per_interval,
        cfg.n_paths, cfg.seed, cfg.group.r, workers=args.workers)
    T = cfg.grid.times[-1]
    _print_header(cfg, args.config, out)
    print("substeps_per_interval %d" % cfg.substeps_per_interval, file=out)
    for payoff in payoffs:
        est = price_full(full_batch, payoff, cfg.group.r, T)
        print("payoff " + _describe(payoff), file=out)
        print(_estimate_line("full_model", est), file=out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mssv",
        description="Monte Carlo pricing of discretely-monitored payoffs "
                    "under multiscale stochastic volatility.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to a config file")
        p.add_argument("--paths", type=int, default=None,
                       help="override the config's n_paths")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's seed")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: MSSV_WORKERS or 1)")
        p.add_argument("--payoff", action="append", default=None,
                       metavar="NAME",
                       help="restrict to the named payoff (repeatable)")

    p = sub.add_parser("price", help="price every configured payoff")
    common(p)
    p.add_argument("--full-model", action="store_true",
                   help="also price under the two-factor reference model")
    p.add_argument("--out", default=None, metavar="FILE",
                   help="write the estimates as CSV")
    p.add_argument("--diagnostics", default=None, metavar="FILE",
                   help="write per-(path, interval) weight series as CSV")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("convergence",
                       help="estimator series over path-count prefixes "
                            "(first selected payoff)")
    common(p)
    p.add_argument("--checkpoints", default=None, metavar="SPEC",
                   help="comma list or geometric spec start:stop:xfactor "
                        "(e.g. 1e3:1e6:x10); default: powers of ten up to "
                        "the batch size")
    p.add_argument("--full-model", action="store_true",
                   help="add reference-model columns")
    p.add_argument("--out", default=None, metavar="FILE",
                   help="write the CSV here instead of stdout")
    p.add_argument("--plot", default=None, metavar="FILE",
                   help="render the series to an image file")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("greeks",
                       help="single-date Greek estimates beside analytic "
                            "values")
    common(p)
    p.set_defaults(func=cmd_greeks)

    p = sub.add_parser("full-model",
                       help="price under the two-factor reference model")
    common(p)
    p.set_defaults(func=cmd_full_model)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        code = args.func(args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except MemoryBudgetError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    print("elapsed %.3fs" % (time.perf_counter() - started), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
