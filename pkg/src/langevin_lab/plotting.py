"""Figure rendering for report tables (opt-in via the CLI --plot flag).

Figures are written next to the delimited output; the compute path never
depends on them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_decay_curve(times, measured, predicted, q, path, title=None) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    measured = np.asarray(measured, dtype=float)
    pos = measured > 0
    ax.semilogy(np.asarray(times)[pos], measured[pos], "o-", ms=2.5, lw=1.0,
                label=f"measured R_{q:g}")
    if predicted is not None:
        predicted = np.asarray(predicted, dtype=float)
        ppos = predicted > 0
        ax.semilogy(np.asarray(times)[ppos], predicted[ppos], "--", lw=1.2,
                    label="decay-ODE prediction")
    ax.set_xlabel("t")
    ax.set_ylabel(f"R_{q:g}(law_t || target)")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bias_scan(rows, path) -> None:
    """rows: iterable of (d, h, q, bias, bound)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    rows = list(rows)
    keys = sorted({(r[0], r[2]) for r in rows})
    for d, q in keys:
        pts = sorted((r[1], r[3]) for r in rows if r[0] == d and r[2] == q)
        hs, biases = zip(*pts)
        ax.loglog(hs, biases, "o-", ms=3, lw=1.0, label=f"d={d}, q={q:g}")
    ax.set_xlabel("h")
    ax.set_ylabel("Renyi bias")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
