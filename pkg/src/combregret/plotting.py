"""Figures written next to the sweep CSVs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.figsize": (5.0, 3.5),
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

# no version strings or timestamps in the files
PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=PNG_METADATA)
    plt.close(fig)


def plot_regret_curves(report, path, title=None):
    """Mean running regret with a one-standard-error band and the bound, if any."""
    curves = np.asarray(report.curves)
    t = np.arange(1, curves.shape[1] + 1)
    mean = curves.mean(axis=0)
    k = len(curves)
    se = curves.std(axis=0, ddof=1) / np.sqrt(k) if k > 1 else np.zeros_like(mean)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, mean, color="C0", lw=1.2, label=f"mean over {k} seeds")
        ax.fill_between(t, mean - se, mean + se, color="C0", alpha=0.25, lw=0)
        if report.bound is not None:
            # the bound scales as sqrt(n); draw it at every horizon
            ax.plot(t, report.bound * np.sqrt(t / t[-1]), color="C3", ls="--", lw=1, label="bound")
        ax.set_xlabel("round t")
        ax.set_ylabel("pseudo-regret")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_summary(rows, path):
    """Final mean regret per cell with error bars, bound and reference markers."""
    labels = [r["cell_id"] for r in rows]
    x = np.arange(len(rows))
    mean = np.array([r["mean_regret"] for r in rows])
    err = np.array([r["stderr"] for r in rows])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(rows) + 2), 3.5))
        ax.errorbar(x, mean, yerr=err, fmt="o", color="C0", capsize=3, label="mean regret")
        for key, marker, color in (("bound", "_", "C3"), ("reference", "x", "C2")):
            pts = [(i, r[key]) for i, r in enumerate(rows) if r.get(key) is not None]
            if pts:
                xi, yi = zip(*pts)
                ax.scatter(xi, yi, marker=marker, s=120, color=color, label=key, zorder=3)
        ax.set_xticks(x, labels, rotation=45, ha="right")
        ax.set_ylabel("pseudo-regret at n")
        ax.legend(frameon=False)
        _save(fig, path)
