"""Figure rendering for the CLI report path.

Every report command writes its delimited output first and then, unless
figures are disabled, a PNG next to it.  The Agg backend keeps rendering
headless and byte-reproducible for identical inputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csr import PowerTable
from .rankspace import RankFunction

_PNG_META = {"Software": "rankfield"}


def _save(fig, path):
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def save_rank_heatmap(rank: RankFunction, path, title: str | None = None) -> None:
    """Upper-triangle heatmap of a rank function on its grid."""
    m = rank.grid.m
    tri = np.full((m, m), np.nan)
    i, j = np.triu_indices(m)
    tri[i, j] = rank.values
    fig, ax = plt.subplots(figsize=(5, 4))
    extent = (rank.grid.a0, rank.grid.a1, rank.grid.a0, rank.grid.a1)
    im = ax.imshow(tri.T, origin="lower", extent=extent, aspect="equal", cmap="viridis")
    ax.plot([rank.grid.a0, rank.grid.a1], [rank.grid.a0, rank.grid.a1], "k-", lw=0.6)
    ax.set_xlabel("birth radius")
    ax.set_ylabel("death radius")
    ax.set_title(title or f"rank function (dim {rank.dim})")
    fig.colorbar(im, ax=ax, shrink=0.85)
    _save(fig, path)


def save_distance_histogram(distances, path, cutoff: float | None = None, title: str | None = None) -> None:
    """Histogram of squared distances, with the rejection cutoff marked."""
    d = np.asarray(distances, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(d, bins=min(40, max(10, len(d) // 8)), color="steelblue", edgecolor="white")
    if cutoff is not None:
        ax.axvline(cutoff, color="crimson", ls="--", lw=1.2, label=f"cutoff {cutoff:.4g}")
        ax.legend(frameon=False)
    ax.set_xlabel("squared distance to mean rank function")
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    _save(fig, path)


def save_score_scatter(scores: np.ndarray, path, labels=None, title: str | None = None) -> None:
    """First two principal-component scores (first vs index when only one)."""
    s = np.asarray(scores, dtype=float)
    fig, ax = plt.subplots(figsize=(4.6, 4))
    if s.shape[1] >= 2:
        x, y = s[:, 0], s[:, 1]
        ax.set_xlabel("first p.c. score")
        ax.set_ylabel("second p.c. score")
    else:
        x, y = np.arange(len(s)), s[:, 0]
        ax.set_xlabel("sample")
        ax.set_ylabel("first p.c. score")
    if labels is None:
        ax.scatter(x, y, s=22, color="steelblue")
    else:
        for lab in dict.fromkeys(labels):
            mask = np.array([l == lab for l in labels])
            ax.scatter(x[mask], y[mask], s=22, label=str(lab))
        ax.legend(frameon=False, fontsize=8)
    ax.axhline(0, color="0.8", lw=0.6)
    ax.axvline(0, color="0.8", lw=0.6)
    if title:
        ax.set_title(title)
    _save(fig, path)


def save_power_chart(table: PowerTable, path) -> None:
    """Grouped bars of rejection counts per model and tested dimension."""
    n_dims, n_models = table.counts.shape
    width = 0.8 / n_dims
    xs = np.arange(n_models)
    fig, ax = plt.subplots(figsize=(1.5 + 1.2 * n_models, 3.4))
    for row, dim in enumerate(table.dims):
        ax.bar(xs + (row - (n_dims - 1) / 2) * width, table.counts[row], width,
               label=f"dim {dim}")
    ax.axhline(table.n_test, color="0.6", lw=0.8, ls=":")
    ax.set_xticks(xs)
    ax.set_xticklabels(table.labels, rotation=15, ha="right", fontsize=8)
    ax.set_ylabel(f"rejections / {table.n_test}")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
