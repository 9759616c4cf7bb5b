"""Figures for machine-count sweeps."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simulator import SweepResult  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}
AREA_COLORS = {"A": "#f4cccc", "B": "#cfe2f3", "C": "#d9ead3"}


def plot_sweep(result: SweepResult, path: str | os.PathLike, title: str | None = None) -> None:
    """Execution time and cost against cluster size, shaded by area."""
    ns = [r.machines for r in result.reports]
    with plt.rc_context(STYLE):
        fig, (ax_t, ax_c) = plt.subplots(2, 1, sharex=True, figsize=(5, 4.5))
        for n, label in zip(ns, result.labels):
            for ax in (ax_t, ax_c):
                ax.axvspan(n - 0.5, n + 0.5, color=AREA_COLORS[label], lw=0)
        ax_t.plot(ns, [r.total_time / 60 for r in result.reports], "o-", color="k", ms=3)
        ax_t.set_ylabel("time (min)")
        ax_c.plot(ns, [r.total_cost / 60 for r in result.reports], "s-", color="k", ms=3)
        ax_c.set_ylabel("cost (machine-min)")
        ax_c.set_xlabel("machines")
        ax_c.set_xticks(ns)
        for ax in (ax_t, ax_c):
            ax.set_yscale("log")
        handles = [plt.Rectangle((0, 0), 1, 1, color=AREA_COLORS[a]) for a in "ABC"]
        fig.legend(handles, ["area A", "area B", "area C"], ncol=3, loc="lower center",
                   bbox_to_anchor=(0.5, -0.04))
        if title:
            ax_t.set_title(title)
        fig.savefig(path)
        plt.close(fig)
