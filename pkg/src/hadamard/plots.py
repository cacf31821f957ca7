"""Static SVG convergence plots (no display needed)."""

from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["plot_gap_csv", "plot_series"]

# fixed element ids and no timestamp, so identical data gives identical bytes
matplotlib.rcParams["svg.hashsalt"] = "hadamard"


def plot_series(xs, ys, path, title, ylabel="duality gap", xlabel="iteration"):
    pts = [(x, y) for x, y in zip(xs, ys) if y is not None and math.isfinite(y) and y > 0]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if pts:
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker=".", lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path


def plot_gap_csv(csv_path, path, title, column="duality_gap", xcol="round"):
    """Plot one column of a trace CSV on a log scale; empty cells are skipped."""
    xs, ys = [], []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row.get(column, "") == "":
                continue
            xs.append(float(row[xcol]))
            ys.append(float(row[column]))
    return plot_series(xs, ys, path, title, ylabel=column.replace("_", " "), xlabel=xcol)
