"""Figure rendering for the benchmark and size-sweep reports.

Figures are written next to the CSV output; rendering is headless (Agg).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_bench_figure", "render_sweep_figure", "linear_fit"]


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2 of y against x."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def render_bench_figure(rows, path) -> str:
    """Grouped bars of translate/solve seconds per instance and strategy."""
    strategies = sorted({r.strategy for r in rows})
    names = list(dict.fromkeys(r.instance for r in rows))
    cells = {(r.instance, r.strategy): r.result for r in rows}
    x = np.arange(len(names))
    width = 0.8 / max(1, len(strategies))
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(names)), 4))
    for si, strat in enumerate(strategies):
        trans = [cells[(n, strat)].translate_time if (n, strat) in cells else 0
                 for n in names]
        solve = [cells[(n, strat)].solve_time if (n, strat) in cells else 0
                 for n in names]
        offs = x + (si - (len(strategies) - 1) / 2) * width
        ax.bar(offs, trans, width, label=f"{strat} translate")
        ax.bar(offs, solve, width, bottom=trans, label=f"{strat} solve",
               alpha=0.6)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("seconds")
    ax.set_title("translate + solve time per instance")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    path = str(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_sweep_figure(sweep, path) -> str:
    """Scatter of emitted gate count against the predicted size measure,
    one panel per strategy, fitted line and R^2 in the legend.

    sweep: mapping strategy -> (measure label, [(x, gates), ...]).
    """
    n = len(sweep)
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 3.6), squeeze=False)
    for ax, (strat, (label, points)) in zip(axes[0], sorted(sweep.items())):
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, "o", ms=4)
        if len(points) >= 2:
            slope, intercept, r2 = linear_fit(xs, ys)
            grid = np.linspace(min(xs), max(xs), 50)
            ax.plot(grid, slope * grid + intercept, "-",
                    label=f"fit, R^2={r2:.4f}")
            ax.legend(fontsize=8)
        ax.set_xlabel(label)
        ax.set_ylabel("gates")
        ax.set_title(strat)
    fig.tight_layout()
    path = str(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
