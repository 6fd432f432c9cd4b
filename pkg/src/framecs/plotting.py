"""Deterministic SVG figures (no timestamps, fixed element ids)."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

HASH_SALT = "framecs"


def save_svg(fig, path, description: str = "") -> Path:
    """Write `fig` as SVG with reproducible ids and no date stamp."""
    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": HASH_SALT, "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "framecs",
                                                  "Description": description})
    plt.close(fig)
    return path


def plot_reconstructions(x, recs: dict, path, description: str = "") -> Path:
    """Original signal next to each reconstruction; `recs` maps titles to vectors."""
    k = len(recs)
    fig, axes = plt.subplots(1, k + 1, figsize=(3.2 * (k + 1), 2.6), sharey=True)
    axes = np.atleast_1d(axes)
    axes[0].plot(np.real(x), lw=0.8)
    axes[0].set_title("original")
    for ax, (title, g) in zip(axes[1:], recs.items()):
        ax.plot(np.real(g), lw=0.8)
        ax.set_title(title, fontsize=8)
    fig.tight_layout()
    return save_svg(fig, path, description)


def plot_lines(xs: Sequence[float], ys: Sequence[float], path, xlabel: str, ylabel: str,
               description: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return save_svg(fig, path, description)


def plot_level_bars(x, s_ratio, k_ratio, path, description: str = "",
                    titles: Optional[Sequence[str]] = None) -> Path:
    """Three panels: the signal, ``s_j/|Λ_j|`` and ``κ̃_j/|Λ_j|`` per level."""
    titles = titles or ("signal", "s_j / |Lambda_j|", "kappa~_j / |Lambda_j|")
    fig, axes = plt.subplots(1, 3, figsize=(10, 2.8))
    axes[0].plot(np.real(x), lw=0.8)
    lev = np.arange(1, len(s_ratio) + 1)
    axes[1].bar(lev, s_ratio)
    axes[2].bar(lev, k_ratio)
    for ax, t in zip(axes, titles):
        ax.set_title(t, fontsize=9)
    for ax in axes[1:]:
        ax.set_xlabel("level")
    fig.tight_layout()
    return save_svg(fig, path, description)
