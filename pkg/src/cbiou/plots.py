"""Figure rendering for the report paths: grid-search heatmap, ablation
chart, and per-threshold metric curves. All output goes to files (Agg).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tuning import GRID_VALUES


def save_grid_heatmap(rows, objective: str, path, values=GRID_VALUES) -> None:
    """Lower-triangle heatmap of the grid-search table, one cell per (b1, b2)."""
    values = sorted(values)
    index = {round(v * 10): k for k, v in enumerate(values)}
    grid = np.full((len(values), len(values)), np.nan)
    for row in rows:
        grid[index[round(row.b2 * 10)], index[round(row.b1 * 10)]] = getattr(row, objective)

    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    masked = np.ma.masked_invalid(grid)
    image = ax.imshow(masked, origin="lower", cmap="viridis")
    for (i, j), value in np.ndenumerate(grid):
        if not np.isnan(value):
            ax.text(j, i, f"{100 * value:.1f}", ha="center", va="center", fontsize=7,
                    color="white")
    ax.set_xticks(range(len(values)), [f"{v:.1f}" for v in values])
    ax.set_yticks(range(len(values)), [f"{v:.1f}" for v in values])
    ax.set_xlabel("b1")
    ax.set_ylabel("b2")
    ax.set_title(f"buffer-scale grid search ({objective})")
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ablation_chart(rows, path) -> None:
    """Grouped bars of HOTA and IDF1 per tracker variant."""
    labels = [row.tracker + ("*" if row.motion else "") for row in rows]
    x = np.arange(len(rows))
    width = 0.38

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(x - width / 2, [100 * r.hota for r in rows], width, label="HOTA")
    ax.bar(x + width / 2, [100 * r.idf1 for r in rows], width, label="IDF1")
    ax.set_xticks(x, labels, rotation=20, ha="right")
    ax.set_ylabel("score (%)")
    ax.set_title("tracker ablation")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_metric_curves(curve, path) -> None:
    """DetA/AssA/HOTA against the matching threshold."""
    alphas = [a for a, _, _, _ in curve]
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.plot(alphas, [d for _, d, _, _ in curve], marker="o", markersize=3, label="DetA")
    ax.plot(alphas, [a for _, _, a, _ in curve], marker="s", markersize=3, label="AssA")
    ax.plot(alphas, [h for _, _, _, h in curve], marker="^", markersize=3, label="HOTA")
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("score")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("metric decomposition by threshold")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
