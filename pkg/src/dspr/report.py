"""Report emission: metrics JSON, plot-ready CSVs, and rendered figures.

Every chart is written twice: once as a delimited file for downstream
plotting and once as a PNG rendered here, so a report directory is useful
both to scripts and to humans.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import CLASS_LABELS

FIG_DPI = 130


def write_metrics_json(path, metrics_by_name: dict) -> None:
    payload = {name: (m.to_dict() if hasattr(m, "to_dict") else m)
               for name, m in metrics_by_name.items()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def write_risk_timeseries(csv_path, png_path, series: dict[str, tuple[np.ndarray, np.ndarray]]) -> None:
    """Aggregate risk over time per scenario: CSV columns plus a line chart."""
    with Path(csv_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "t", "aggregate_risk"])
        for name, (times, values) in series.items():
            for t, v in zip(times, values):
                writer.writerow([name, repr(float(t)), repr(float(v))])

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, (times, values) in series.items():
        ax.plot(times, values, lw=1.2, label=name)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("aggregate slot risk")
    ax.set_title("Perceived-risk aggregate per scenario")
    if len(series) <= 12:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(png_path, dpi=FIG_DPI)
    plt.close(fig)


def write_confusion(csv_path, png_path, confusion: np.ndarray,
                    title: str = "Confusion matrix") -> None:
    confusion = np.asarray(confusion)
    with Path(csv_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [f"pred_{c}" for c in CLASS_LABELS])
        for i, cls in enumerate(CLASS_LABELS):
            writer.writerow([f"true_{cls}"] + list(confusion[i]))

    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    im = ax.imshow(confusion, cmap="Blues")
    for i in range(confusion.shape[0]):
        for j in range(confusion.shape[1]):
            ax.text(j, i, str(int(confusion[i, j])), ha="center", va="center",
                    color="black", fontsize=9)
    ax.set_xticks(range(len(CLASS_LABELS)), [str(c) for c in CLASS_LABELS])
    ax.set_yticks(range(len(CLASS_LABELS)), [str(c) for c in CLASS_LABELS])
    ax.set_xlabel("predicted rating")
    ax.set_ylabel("true rating")
    ax.set_title(title)
    fig.colorbar(im, shrink=0.8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=FIG_DPI)
    plt.close(fig)


def write_adoption(csv_path, png_path, iterations: list[dict]) -> None:
    """Self-training audit: adopted pseudo-labels per iteration."""
    with Path(csv_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "train_size", "adopted", "pseudo_total",
                         "remaining_unlabeled"])
        for it in iterations:
            writer.writerow([it["iteration"], it["train_size"], it["adopted"],
                             it["pseudo_total"], it["remaining_unlabeled"]])

    xs = [it["iteration"] for it in iterations]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(xs, [it["adopted"] for it in iterations], color="#4878a8",
           label="adopted this iteration")
    ax.plot(xs, [it["remaining_unlabeled"] for it in iterations], "o-",
            color="#b0413e", label="remaining unlabeled")
    ax.set_xlabel("iteration")
    ax.set_ylabel("windows")
    ax.set_title("Pseudo-label adoption")
    ax.set_xticks(xs)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=FIG_DPI)
    plt.close(fig)
