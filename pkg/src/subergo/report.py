"""CSV, figure and manifest emission for the CLI report path.

All files are written atomically (temp + rename) with full-precision
floats, so repeated runs diff bitwise.  Figures render through the Agg
backend next to the delimited output they illustrate.
"""

from __future__ import annotations

import json
import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _atomic_write(path, writer, mode="w"):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            writer(fh)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_csv(path, columns, header_comments=(), footer_comments=()):
    """``columns`` is an ordered {name: sequence}; comments start with '#'."""
    names = list(columns)
    rows = zip(*(columns[n] for n in names))

    def writer(fh):
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
        for line in footer_comments:
            fh.write(f"# {line}\n")

    _atomic_write(path, writer)


def write_text(path, text):
    _atomic_write(path, lambda fh: fh.write(text))


def write_manifest(path, command, config, seed, outputs):
    import scipy

    from . import __version__

    payload = {
        "command": command,
        "config": config,
        "seed": seed,
        "outputs": sorted(outputs),
        "versions": {
            "subergo": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    _atomic_write(path, lambda fh: fh.write(
        json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"))


def save_figure(fig, path):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    tmp = path + ".tmp.png"
    fig.savefig(tmp, dpi=150, bbox_inches="tight")
    plt.close(fig)
    os.replace(tmp, path)


def rate_figure(n, r, descriptor_text=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    mask = n >= 1
    ax.loglog(n[mask], r[mask], lw=1.5)
    ax.set_xlabel("n")
    ax.set_ylabel("r(n)")
    title = "induced convergence rate"
    if descriptor_text:
        title += f"\n{descriptor_text}"
    ax.set_title(title, fontsize=10)
    ax.grid(True, which="both", alpha=0.3)
    return fig


def tv_figure(n, d, product=None, classification=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    mask = (n >= 1) & (d > 0)
    ax.loglog(n[mask], d[mask], lw=1.5, label="||P^n(x0,.) - pi||_f")
    if product is not None:
        pm = (n >= 1) & (product > 0)
        ax.loglog(n[pm], product[pm], lw=1.2, ls="--", label="r(n) d(n)")
    ax.set_xlabel("n")
    ax.set_ylabel("distance")
    if classification:
        ax.set_title(f"TV decay (product: {classification})", fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return fig


def slack_figure(report):
    fig, ax = plt.subplots(figsize=(6, 4))
    pts = np.arange(report.points.size)
    delta = report.delta
    ax.plot(pts[report.in_c], delta[report.in_c], ".", ms=3, label="on C")
    ax.plot(pts[~report.in_c], delta[~report.in_c], ".", ms=3, label="off C")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("grid index")
    ax.set_ylabel("PV + phi(V) - V")
    ax.set_title("drift defect per grid point", fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return fig


def tradeoff_figure(table, n_lo=10.0, n_hi=1e5):
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.geomspace(n_lo, n_hi, 120)
    for row in table.rows:
        ax.loglog(n, row.rate_fn(n), lw=1.2, label=row.pair_id)
    ax.set_xlabel("n")
    ax.set_ylabel("Psi1(r(n))")
    ax.set_title(f"rate/norm trade-off for {table.phi_label}", fontsize=10)
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    return fig
