"""Delimited report output and the figures rendered alongside each report.

Every CSV writer has a figure-rendering counterpart; command-line report
paths emit both, with the figure sharing the CSV's basename. Values are
written with full float precision, "." decimal separator, and the literal
"inf" for infinite PSNR.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import PatchSelection
from .metrics import StudyRow
from .train import EpochStats

STUDY_COLUMNS = {
    "rank": ("rank", "psnr_db"),
    "sharpness": ("zeta", "variance"),
}

HISTORY_COLUMNS = ("epoch", "total", "mse", "lowrank", "sharpness", "filter_measure")

EVAL_COLUMNS = ("image", "model_psnr", "model_ssim", "bicubic_psnr", "bicubic_ssim")


def write_study_csv(path, rows: list[StudyRow], kind: str) -> None:
    param, value = STUDY_COLUMNS[kind]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow([param, value])
        for row in rows:
            writer.writerow([str(row.parameter), str(row.value)])


def render_study_figure(path, rows: list[StudyRow], kind: str) -> None:
    param, value = STUDY_COLUMNS[kind]
    finite = [(r.parameter, r.value) for r in rows if np.isfinite(r.value)]
    fig, ax = plt.subplots(figsize=(6, 4))
    if finite:
        xs, ys = zip(*finite)
        ax.plot(xs, ys, marker="o")
    ax.set_xlabel(param)
    ax.set_ylabel(value)
    ax.set_title(f"{kind} study")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_history_csv(path, history: list[EpochStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(HISTORY_COLUMNS)
        for row in history:
            writer.writerow(
                [row.epoch, str(row.total), str(row.mse), str(row.lowrank), str(row.sharpness), str(row.filter_measure)]
            )


def render_history_figure(path, history: list[EpochStats]) -> None:
    epochs = [h.epoch for h in history]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(epochs, [h.total for h in history], marker="o", label="total")
    ax1.plot(epochs, [h.mse for h in history], marker=".", label="mse")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss")
    ax1.legend()
    ax1.grid(True, alpha=0.3)
    ax2.plot(epochs, [h.lowrank for h in history], label="lowrank")
    ax2.plot(epochs, [h.sharpness for h in history], label="sharpness")
    ax2.plot(epochs, [h.filter_measure for h in history], label="filter measure")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("prior terms")
    ax2.legend()
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_eval_csv(path, rows: list[tuple[str, float, float, float, float]]) -> None:
    """Per-image metric rows plus a trailing arithmetic-mean row."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(EVAL_COLUMNS)
        for name, mp, ms, bp, bs in rows:
            writer.writerow([name, str(mp), str(ms), str(bp), str(bs)])
        cols = list(zip(*[(mp, ms, bp, bs) for _, mp, ms, bp, bs in rows]))
        writer.writerow(["mean"] + [str(float(np.mean(c))) for c in cols])


def render_eval_figure(path, rows: list[tuple[str, float, float, float, float]]) -> None:
    model = [r[1] for r in rows]
    bicubic = [r[3] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 5))
    finite = [(b, m) for b, m in zip(bicubic, model) if np.isfinite(b) and np.isfinite(m)]
    if finite:
        xs, ys = zip(*finite)
        ax.scatter(xs, ys, s=18)
        lo = min(min(xs), min(ys))
        hi = max(max(xs), max(ys))
        ax.plot([lo, hi], [lo, hi], linestyle="--", linewidth=1, color="gray")
    ax.set_xlabel("bicubic PSNR (dB)")
    ax.set_ylabel("model PSNR (dB)")
    ax.set_title("per-image PSNR")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_patch_index_csv(path, selections: list[PatchSelection]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["image", "kind", "row", "col", "score"])
        for sel in selections:
            writer.writerow([sel.image_index, "sharp", sel.sharp_pos[0], sel.sharp_pos[1], str(sel.sharp_score)])
            writer.writerow([sel.image_index, "smooth", sel.smooth_pos[0], sel.smooth_pos[1], str(sel.smooth_score)])
