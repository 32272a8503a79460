"""Figures written next to the CSV output (Agg backend, no display)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (4.0, 3.4),
    "savefig.dpi": 150,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_zero_level_set(contours, path, domain=(-1.0, 1.0, -1.0, 1.0), title=None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for poly in contours:
            ax.plot(poly[:, 0], poly[:, 1], "k-", lw=1.0)
        ax.set_xlim(domain[0], domain[1])
        ax.set_ylim(domain[2], domain[3])
        ax.set_aspect("equal")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_trace(trace, column: str, path, ylabel=None, reference=None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(trace.time, getattr(trace, column), "b.-", ms=3, lw=0.8)
        if reference is not None:
            ax.axhline(reference, color="k", ls="--", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel or column)
        ax.ticklabel_format(axis="x", style="sci", scilimits=(-2, 2))
        return _save(fig, path)


def plot_convergence(report, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        res = np.asarray(report.resolutions)
        orders = report.orders
        for name in report.norms:
            err = report.column(name)
            if np.all(err > 0):
                ax.loglog(res, err, "o-", ms=3, lw=0.8, label=f"{name} ({orders[name]:.2f})")
        ax.set_xlabel(report.variable)
        ax.set_ylabel("error")
        ax.set_title(f"{report.kind} study")
        ax.legend(loc="best")
        return _save(fig, path)
