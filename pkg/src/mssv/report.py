"""Figure rendering for convergence series.

Kept separate from the CLI so matplotlib is only imported when a plot is
actually requested.
"""

import math


def render_convergence(series, dest, label=None):
    """Render a two-panel convergence figure to an image file.

    Left panel: estimator means with 95% confidence bands against the
    path count (log x). Right panel: standard errors on log-log axes
    with a square-root-of-N reference slope.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = series.checkpoints
    ns = [cp.n for cp in rows]
    curves = [
        ("zero-order", [cp.zero_order for cp in rows], "tab:blue"),
        ("corrected", [cp.corrected for cp in rows], "tab:red"),
    ]
    if rows and rows[0].full_model is not None:
        curves.append(("full model", [cp.full_model for cp in rows],
                       "tab:green"))

    fig, (ax_mean, ax_err) = plt.subplots(1, 2, figsize=(11.0, 4.2))
    for name, ests, color in curves:
        means = [e.mean for e in ests]
        bands = [1.96 * e.stderr for e in ests]
        ax_mean.errorbar(ns, means, yerr=bands, label=name, color=color,
                         marker="o", markersize=3, capsize=3, linewidth=1.2)
        ax_err.loglog(ns, [e.stderr for e in ests], label=name, color=color,
                      marker="o", markersize=3, linewidth=1.2)
    if rows:
        base = curves[0][1]
        guide = [base[0].stderr * math.sqrt(ns[0] / n) for n in ns]
        ax_err.loglog(ns, guide, linestyle="--", color="gray",
                      linewidth=1.0, label="1/sqrt(paths)")

    ax_mean.set_xscale("log")
    ax_mean.set_xlabel("paths")
    ax_mean.set_ylabel("price estimate")
    ax_mean.set_title(label if label else "estimate with 95% band")
    ax_mean.legend()
    ax_err.set_xlabel("paths")
    ax_err.set_ylabel("standard error")
    ax_err.legend()
    fig.tight_layout()
    fig.savefig(dest, dpi=150)
    plt.close(fig)
