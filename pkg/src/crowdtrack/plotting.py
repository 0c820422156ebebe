"""Report figures written straight to image files.

Figures are built with :class:`matplotlib.figure.Figure` rather than pyplot,
so no GUI backend or global figure state is involved.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np
from matplotlib import colormaps
from matplotlib.figure import Figure

from .metrics import IdeuclResult
from .motdata import SequenceInfo, Trajectory

__all__ = ["plot_ideucl_coverage", "plot_precision_recall", "plot_trajectories"]


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100)
    return path


def plot_ideucl_coverage(result: IdeuclResult, path: str | Path, title: str = "") -> Path:
    """Bar chart of covered versus total path length for each ground-truth track."""
    ids = sorted(result.per_track)
    covered = np.array([result.per_track[i][0] for i in ids])
    total = np.array([result.per_track[i][1] for i in ids])
    fig = Figure(figsize=(max(4.0, 0.3 * len(ids) + 2.0), 3.5))
    ax = fig.add_subplot()
    x = np.arange(len(ids))
    ax.bar(x, total, color="0.85", label="path length")
    ax.bar(x, covered, color="tab:blue", label="covered by matched hypothesis")
    ax.set_xticks(x, [str(i) for i in ids], fontsize=7)
    ax.set_xlabel("ground-truth track")
    ax.set_ylabel("pixels")
    ax.set_title(title or f"IDEucl {100 * result.score:.1f}")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_trajectories(gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
                      path: str | Path, info: SequenceInfo | None = None) -> Path:
    """Centre paths of ground truth (wide grey) under hypotheses (coloured)."""
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot()
    for t in gt.values():
        c = t.centers()
        ax.plot(c[:, 0], c[:, 1], color="0.6", lw=2.5, alpha=0.6)
    cmap = colormaps["tab20"]
    for k, tid in enumerate(sorted(hyp)):
        c = hyp[tid].centers()
        ax.plot(c[:, 0], c[:, 1], lw=1.0, color=cmap(k % 20))
    if info is not None:
        ax.set_xlim(0, info.width)
        ax.set_ylim(info.height, 0)
    else:
        ax.invert_yaxis()
    ax.set_aspect("equal", adjustable="box")
    ax.set_title(f"{len(gt)} ground-truth tracks, {len(hyp)} hypotheses")
    fig.tight_layout()
    return _save(fig, path)


def plot_precision_recall(precision: np.ndarray, recall: np.ndarray, path: str | Path,
                          ap: float | None = None) -> Path:
    fig = Figure(figsize=(4.5, 4.0))
    ax = fig.add_subplot()
    ax.plot(recall, precision, color="tab:red")
    ax.set_xlim(0, 1.0)
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    if ap is not None:
        ax.set_title(f"AP {100 * ap:.1f}")
    fig.tight_layout()
    return _save(fig, path)
