"""Matplotlib rendering of evaluation reports and segment panels."""

from __future__ import annotations

import numpy as np

from .metrics import Confusion, RocCurve


def _plt():
    import matplotlib

    if matplotlib.get_backend().lower() not in ("agg", "module://matplotlib_inline.backend_inline"):
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_roc_figure(curve: RocCurve, path: str) -> None:
    plt = _plt()
    fpr = [p[0] for p in curve.points]
    tpr = [p[1] for p in curve.points]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(fpr, tpr, color="tab:blue", lw=2, label=f"AUC = {curve.auc:.3f}")
    ax.plot([0, 1], [0, 1], color="gray", ls="--", lw=1)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_confusion_figure(c: Confusion, path: str) -> None:
    plt = _plt()
    grid = np.array([[c.tp, c.fn], [c.fp, c.tn]], dtype=float)
    fig, ax = plt.subplots(figsize=(4.2, 4))
    ax.imshow(grid, cmap="Blues")
    labels = [["TP", "FN"], ["FP", "TN"]]
    for i in range(2):
        for j in range(2):
            ax.text(j, i, f"{labels[i][j]}\n{int(grid[i, j])}",
                    ha="center", va="center",
                    color="white" if grid[i, j] > grid.max() / 2 else "black")
    ax.set_xticks([0, 1], ["good", "bad"])
    ax.set_yticks([0, 1], ["good", "bad"])
    ax.set_xlabel("Predicted")
    ax.set_ylabel("Actual")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_segment_panel(samples, fs: float, pixels, path: str,
                       reconstruction=None, segment_id: str = "") -> None:
    """Waveform (with optional reconstruction overlay) above its image."""
    plt = _plt()
    samples = np.asarray(samples)
    t = np.arange(samples.shape[0]) / fs
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(8, 4.5),
                                   gridspec_kw={"height_ratios": [2, 1]})
    ax0.plot(t, samples, color="tab:red", lw=1, label="segment")
    if reconstruction is not None:
        ax0.plot(t, np.asarray(reconstruction), color="k", ls=":", lw=1, label="reconstruction")
        ax0.legend(loc="upper right", fontsize=8)
    ax0.set_xlabel("Time (s)")
    ax0.set_ylabel("Amplitude")
    if segment_id:
        ax0.set_title(segment_id, fontsize=10)
    ax1.imshow(np.asarray(pixels), cmap="gray", aspect="auto", interpolation="nearest")
    ax1.set_xlabel("Sample")
    ax1.set_ylabel("Component")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
