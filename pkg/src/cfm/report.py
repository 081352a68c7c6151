"""Plain-text tables, delimited metric files, and figure rendering for the
report-producing commands."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import metrics as metrics_mod
from .metrics import ConfusionMatrix, TimingGrid
from .model import Model
from .transform import materialize_original_space

METRIC_COLUMNS = ("acc", "acc_class", "gm", "rules", "mean_rule_length",
                  "fuzzy_sets_per_variable", "trl")


def metrics_row(cm: ConfusionMatrix, model: Model) -> dict:
    summary = model.summary()
    return {
        "acc": metrics_mod.accuracy(cm),
        "acc_class": metrics_mod.acc_class(cm),
        "gm": metrics_mod.gm(cm),
        "rules": summary["rules"],
        "mean_rule_length": summary["mean_rule_length"],
        "fuzzy_sets_per_variable": summary["fuzzy_sets_per_variable"],
        "trl": summary["trl"],
    }


def format_metrics_text(rows: list[dict], label_key: str | None = None) -> str:
    cols = ([label_key] if label_key else []) + list(METRIC_COLUMNS)
    widths = {c: max(len(c), 12) for c in cols}
    header = "  ".join(f"{c:>{widths[c]}}" for c in cols)
    lines = [header]
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(f"{v:>{widths[c]}.6f}" if isinstance(v, float) else f"{v:>{widths[c]}}")
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


def write_metrics_csv(path: str | Path, rows: list[dict], label_key: str | None = None) -> None:
    cols = ([label_key] if label_key else []) + list(METRIC_COLUMNS)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                             for c in cols])


def plot_confusion(cm: ConfusionMatrix, class_labels, path: str | Path) -> None:
    m = cm.n_classes
    fig, ax = plt.subplots(figsize=(1.2 * m + 2, 1.2 * m + 1.5))
    ax.imshow(cm.counts, cmap="Blues")
    for i in range(m):
        for j in range(m):
            ax.text(j, i, str(int(cm.counts[i, j])), ha="center", va="center")
    ax.set_xticks(range(m), class_labels)
    ax.set_yticks(range(m), class_labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    nc = int(cm.no_cover.sum())
    ax.set_title(f"Confusion matrix (uncovered: {nc})")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_cv_metrics(rows: list[dict], path: str | Path) -> None:
    folds = [row["fold"] for row in rows]
    x = np.arange(len(folds))
    width = 0.27
    fig, ax = plt.subplots(figsize=(1.2 * len(folds) + 3, 4))
    for offset, key in zip((-width, 0.0, width), ("acc", "acc_class", "gm")):
        ax.bar(x + offset, [row[key] for row in rows], width, label=key)
    ax.set_xticks(x, [str(f) for f in folds])
    ax.set_xlabel("fold")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.set_title("Cross-validation metrics per fold")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_fuzzy_partitions(model: Model, path: str | Path, max_vars: int = 12) -> None:
    """Triangles recovered in original units, one panel per numeric variable."""
    vertices = materialize_original_space(model.fuzzy_partition, model.quantile_table)
    variables = sorted(vertices)[:max_vars]
    if not variables:
        return
    ncols = min(3, len(variables))
    nrows = (len(variables) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.5 * ncols, 2.8 * nrows),
                             squeeze=False)
    for k, var in enumerate(variables):
        ax = axes[k // ncols][k % ncols]
        for l, (left, center, right) in enumerate(vertices[var]):
            xs = [left, center, right]
            ys = [0.0 if left < center else 1.0, 1.0, 0.0 if right > center else 1.0]
            ax.plot(xs, ys, label=f"L{l + 1}")
        ax.set_title(model.schema.attributes[var].name)
        ax.set_ylim(0, 1.1)
    axes[0][0].legend(fontsize="small")
    for k in range(len(variables), nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_timing_csv(path: str | Path, grids: dict[str, TimingGrid]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "cores", "fraction", "seconds"])
        for stage, grid in grids.items():
            for ci, cores in enumerate(grid.cores):
                for fi, fraction in enumerate(grid.fractions):
                    writer.writerow([stage, cores, repr(fraction),
                                     repr(float(grid.seconds[ci, fi]))])


def scalability_rows(grid: TimingGrid) -> list[dict]:
    """One row per m along each measure's axis, using the grid's base cell."""
    base_cores = min(grid.cores)
    base_fraction = min(grid.fractions)
    rows = []
    for cores in grid.cores:
        m = cores / base_cores
        rows.append({"measure": "speedup", "m": m,
                     "value": metrics_mod.speedup(grid, m)})
    for fraction in grid.fractions:
        m = fraction / base_fraction
        rows.append({"measure": "sizeup", "m": m,
                     "value": metrics_mod.sizeup(grid, m)})
    n_diag = min(len(grid.cores), len(grid.fractions))
    for k in range(n_diag):
        m = grid.cores[k] / base_cores
        if np.isclose(m, grid.fractions[k] / base_fraction):
            rows.append({"measure": "scaleup", "m": m,
                         "value": metrics_mod.scaleup(grid, m)})
    return rows


def write_scalability_csv(path: str | Path, rows_by_stage: dict[str, list[dict]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "measure", "m", "value"])
        for stage, rows in rows_by_stage.items():
            for row in rows:
                writer.writerow([stage, row["measure"], repr(float(row["m"])),
                                 repr(float(row["value"]))])


def plot_scalability(stage: str, grid: TimingGrid, rows: list[dict],
                     path: str | Path) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    for ax, measure in zip(axes, ("speedup", "sizeup", "scaleup")):
        pts = sorted((r["m"], r["value"]) for r in rows if r["measure"] == measure)
        if pts:
            ms, vs = zip(*pts)
            ax.plot(ms, vs, "o-")
            ax.plot(ms, ms if measure != "scaleup" else [1.0] * len(ms), "--",
                    color="gray", label="ideal")
        ax.set_title(measure)
        ax.set_xlabel("m")
        ax.legend()
    fig.suptitle(f"Scalability: {stage}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
