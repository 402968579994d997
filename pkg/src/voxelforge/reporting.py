"""Delimited reports and the matplotlib figures rendered next to them.

Every analysis writes a CSV (rows `champion_id,metric,value`), usually a
JSON summary, and a PNG figure into the same output directory. Figures
use the Agg backend so runs work headless.
"""

from __future__ import annotations

import json

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .analysis import significance_stars

RULE_COLORS = {"none": "#777777", "stress": "#d55e00", "pressure": "#0072b2"}


def write_metric_csv(path, rows) -> None:
    """rows: iterable of (champion_id, metric, value)."""
    with open(path, "w") as fh:
        fh.write("champion_id,metric,value\n")
        for cid, metric, value in rows:
            fh.write(f"{cid},{metric},{value!r}\n")


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1, default=float)
        fh.write("\n")


def fitness_figure(rows, path) -> None:
    """Best/mean/median fitness curves of one run (RunLog rows)."""
    gens = [r.generation for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(gens, [r.best_fitness for r in rows], label="best", lw=2)
    ax.plot(gens, [r.mean_fitness for r in rows], label="mean", alpha=0.8)
    ax.plot(gens, [r.median_fitness for r in rows], label="median", alpha=0.8)
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness (voxel lengths)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def trajectory_figure(trajectory: np.ndarray, voxel_edge: float, path) -> None:
    """Horizontal path and height of the center of mass."""
    t, x, y, z = trajectory.T
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(x / voxel_edge, y / voxel_edge, lw=1.5)
    ax1.plot(x[0] / voxel_edge, y[0] / voxel_edge, "go", label="start")
    ax1.plot(x[-1] / voxel_edge, y[-1] / voxel_edge, "rs", label="end")
    ax1.set_xlabel("x (voxel lengths)")
    ax1.set_ylabel("y (voxel lengths)")
    ax1.set_aspect("equal", adjustable="datalim")
    ax1.legend()
    ax2.plot(t, z / voxel_edge, lw=1)
    ax2.set_xlabel("t (s)")
    ax2.set_ylabel("CoM height (voxel lengths)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def diversity_figure(names, matrix: np.ndarray, path) -> None:
    """Heatmap of pairwise rotation-minimized Hausdorff distances."""
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(matrix, cmap="viridis")
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=7)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    fig.colorbar(im, ax=ax, label="distance (voxel lengths)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def robustness_figure(samples_by_champion: dict, path) -> None:
    """Per-champion scatter of R samples with mean markers."""
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(samples_by_champion)), 4))
    names = list(samples_by_champion)
    for i, name in enumerate(names):
        vals = samples_by_champion[name]
        ax.plot([i] * len(vals), vals, "o", alpha=0.5, color="#0072b2")
        ax.plot(i, np.mean(vals), "k_", ms=18, mew=2)
    ax.axhline(1.0, ls="--", color="grey", lw=1)
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("R = F_test / F_train")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def metric_bars_figure(rows, metrics, path) -> None:
    """Grouped bars of canalization metrics per champion.

    rows: list of (champion_id, rule_label, {metric: value}).
    """
    fig, axes = plt.subplots(1, len(metrics),
                             figsize=(3.2 * len(metrics), 3.8), squeeze=False)
    for ax, metric in zip(axes[0], metrics):
        xs = range(len(rows))
        vals = [r[2].get(metric, np.nan) for r in rows]
        colors = [RULE_COLORS.get(r[1], "#333333") for r in rows]
        ax.bar(xs, vals, color=colors)
        ax.set_xticks(list(xs), [r[0] for r in rows], rotation=45,
                      ha="right", fontsize=7)
        ax.set_title(metric)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def compare_figure(group_means: dict, pairwise_p: dict, metric: str, path
                   ) -> None:
    """Group-mean bars annotated with corrected p-value stars."""
    names = list(group_means)
    vals = [group_means[n] for n in names]
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.bar(names, vals, color=[RULE_COLORS.get(n, "#333333") for n in names])
    ax.set_ylabel(metric)
    top = max(vals) if vals else 1.0
    for i, ((a, b), p) in enumerate(pairwise_p.items()):
        ia, ib = names.index(a), names.index(b)
        y = top * (1.08 + 0.1 * i)
        ax.plot([ia, ib], [y, y], color="k", lw=1)
        ax.text((ia + ib) / 2, y, significance_stars(p),
                ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
