"""Figure rendering for experiment reports.

Every CSV the report path writes gets a sibling PNG: mantissa histograms
against the uniform reference for distribution outputs, per-column traces
for sweeps.  Helpers return Figure objects so tests can poke at them
without touching the filesystem.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def mantissa_figure(dist, base, title=None, bins=50):
    """Coarse-binned mantissa mass against the flat Benford reference."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    heights, edges = np.histogram(
        dist.mantissas, bins=bins, range=(0.0, 1.0), weights=dist.weights
    )
    ax.stairs(heights * bins, edges, fill=True, alpha=0.6, label="observed")
    ax.axhline(1.0, color="k", lw=1.0, ls="--", label="uniform")
    ax.set_xlabel(f"mantissa (base {base})")
    ax.set_ylabel("density")
    ax.set_xlim(0.0, 1.0)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return fig


def sweep_figure(axis_name, axis_values, columns, title=None):
    """One trace per numeric result column against the swept axis."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for name, ys in columns.items():
        ax.plot(axis_values, ys, marker="o", ms=3, lw=1.2, label=name)
    ax.set_xlabel(axis_name)
    if title:
        ax.set_title(title)
    if columns:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def save_figure(fig, path):
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(path)
