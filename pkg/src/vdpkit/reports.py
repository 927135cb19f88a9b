"""Report rendering: evaluation figures next to delimited files.

Figures are drawn straight onto Agg canvases (no pyplot, no global
state) so report generation stays deterministic and headless.  Every
figure-writing function has a sibling that writes the same numbers as
a delimited file, and the CLI always emits both.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .metrics import ClassReport, ConfusionMatrix, normalize_columns

DELIMITER = ","


def write_delimited(
    path: str | Path, header: Sequence[str], rows: Sequence[Sequence]
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=DELIMITER)
        writer.writerow(header)
        writer.writerows(rows)


def _new_axes(width: float, height: float):
    fig = Figure(figsize=(width, height), dpi=120)
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(111)


def save_confusion_figure(cm: ConfusionMatrix, path: str | Path) -> None:
    """Normalized confusion heatmap, predicted down the side."""
    norm = normalize_columns(cm)
    n = len(cm.labels)
    fig, ax = _new_axes(1.2 + 0.75 * n, 1.0 + 0.75 * n)
    ax.imshow(norm.matrix, cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(n), cm.labels, rotation=45, ha="right")
    ax.set_yticks(range(n), cm.labels)
    ax.set_xlabel("actual")
    ax.set_ylabel("predicted")
    for i in range(n):
        for j in range(n):
            v = norm.matrix[i, j]
            ax.text(
                j,
                i,
                f"{v:.2f}",
                ha="center",
                va="center",
                fontsize=8,
                color="white" if v < 0.5 else "black",
            )
    fig.tight_layout()
    fig.savefig(path)


def write_confusion_delimited(cm: ConfusionMatrix, path: str | Path) -> None:
    """Counts with a predicted-label row per line, actual labels across."""
    header = ["predicted\\actual", *cm.labels]
    rows = [
        [label, *cm.counts[i].tolist()] for i, label in enumerate(cm.labels)
    ]
    write_delimited(path, header, rows)


def write_class_report_delimited(rep: ClassReport, path: str | Path) -> None:
    header = ["class", "precision", "recall", "f1"]
    rows: list[list] = [
        [label, rep.precision[i], rep.recall[i], rep.f1[i]]
        for i, label in enumerate(rep.labels)
    ]
    rows.append(["macro", rep.macro_precision, rep.macro_recall, rep.macro_f1])
    write_delimited(path, header, rows)


def save_training_curves(epochs: Sequence[Mapping], path: str | Path) -> None:
    """Loss and validation accuracy against epoch on twin axes."""
    xs = [e["epoch"] for e in epochs]
    fig, ax = _new_axes(6.0, 3.6)
    ax.plot(xs, [e["loss"] for e in epochs], color="tab:red", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss", color="tab:red")
    ax2 = ax.twinx()
    ax2.plot(
        xs,
        [e["val_top1"] for e in epochs],
        color="tab:blue",
        label="val top-1",
    )
    ax2.set_ylabel("val top-1", color="tab:blue")
    ax2.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path)


def write_training_curves_delimited(
    epochs: Sequence[Mapping], path: str | Path
) -> None:
    header = ["epoch", "loss", "lr", "val_top1"]
    rows = [[e["epoch"], e["loss"], e["lr"], e["val_top1"]] for e in epochs]
    write_delimited(path, header, rows)


def save_label_distribution_figure(stats: Mapping, path: str | Path) -> None:
    """Stacked per-annotator bars of 1/2/3-label submission fractions."""
    annotators = sorted(stats["annotators"])
    fracs = np.array(
        [
            [stats["annotators"][a]["label_fractions"][k] for k in ("1", "2", "3")]
            for a in annotators
        ]
    )
    fig, ax = _new_axes(1.6 + 0.9 * max(len(annotators), 1), 3.4)
    xs = np.arange(len(annotators))
    bottom = np.zeros(len(annotators))
    for col, name in enumerate(("1 label", "2 labels", "3 labels")):
        ax.bar(xs, fracs[:, col], bottom=bottom, label=name, width=0.6)
        bottom += fracs[:, col]
    ax.set_xticks(xs, annotators, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("fraction of submissions")
    kappa = stats.get("kappa")
    ax.set_title(
        "agreement kappa: " + ("n/a" if kappa is None else f"{kappa:.3f}")
    )
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)


def write_stats_json(stats: Mapping, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")


def save_image_grid(
    images: Sequence[np.ndarray],
    path: str | Path,
    titles: Sequence[str] | None = None,
    columns: int = 4,
) -> None:
    """Contact sheet of uint8 RGB images, row-major."""
    count = len(images)
    cols = max(1, min(columns, count))
    rows = (count + cols - 1) // cols
    fig = Figure(figsize=(2.2 * cols, 2.4 * rows), dpi=120)
    FigureCanvasAgg(fig)
    for i, img in enumerate(images):
        ax = fig.add_subplot(rows, cols, i + 1)
        ax.imshow(img)
        ax.set_xticks([])
        ax.set_yticks([])
        if titles is not None:
            ax.set_title(titles[i], fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
