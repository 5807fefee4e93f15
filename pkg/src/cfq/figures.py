"""Figure rendering for reports.

Analytics stays figure-free; this module is the only place matplotlib is
imported, always with the Agg backend so rendering works headless. Each
function writes one PNG file next to whatever delimited output the caller
produced and returns the path it wrote.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import AgreementReport, CrosstabReport


def _finish(fig, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def render_agreement(report: AgreementReport, path: Path | str) -> Path:
    """Confusion-matrix heatmap with per-cell counts and the kappa value."""
    matrix = report.matrix
    labels = [cls.value for cls in matrix.classes]
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    image = ax.imshow(matrix.counts, cmap="Blues")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel(report.annotator_b)
    ax.set_ylabel(report.annotator_a)
    peak = max((cell for row in matrix.counts for cell in row), default=0)
    for i, row in enumerate(matrix.counts):
        for j, cell in enumerate(row):
            color = "white" if peak and cell > peak / 2 else "black"
            ax.text(j, i, str(cell), ha="center", va="center", color=color)
    kappa = "Undefined" if report.kappa is None else f"{report.kappa:.3f}"
    ax.set_title(f"Agreement: {report.percent_agreement:.1%}, kappa: {kappa}")
    fig.colorbar(image, ax=ax, shrink=0.8)
    return _finish(fig, path)


def render_proportions(
    proportions: Mapping[object, Fraction],
    path: Path | str,
    title: str = "Proportions",
) -> Path:
    """Bar chart of a proportion report; keys keep their given order."""
    names = [getattr(key, "value", key) for key in proportions]
    values = [float(v) for v in proportions.values()]
    fig, ax = plt.subplots(figsize=(max(4.8, 0.9 * len(names)), 3.6))
    ax.bar(range(len(names)), values, color="#4878a8")
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right")
    ax.set_ylabel("proportion")
    ax.set_ylim(0, 1)
    ax.set_title(title)
    for i, value in enumerate(values):
        ax.text(i, value, f"{value:.2f}", ha="center", va="bottom", fontsize=8)
    return _finish(fig, path)


def render_crosstab(report: CrosstabReport, path: Path | str) -> Path:
    """Heatmap of prompt categories against designated label classes."""
    fig, ax = plt.subplots(figsize=(5.6, 4.6))
    image = ax.imshow(report.counts, cmap="Greens")
    ax.set_xticks(range(len(report.labels)), [l.value for l in report.labels])
    ax.set_yticks(range(len(report.categories)), [c.value for c in report.categories])
    peak = max((cell for row in report.counts for cell in row), default=0)
    for i, row in enumerate(report.counts):
        for j, cell in enumerate(row):
            color = "white" if peak and cell > peak / 2 else "black"
            ax.text(j, i, str(cell), ha="center", va="center", color=color)
    ax.set_title("Questions by prompt category and label")
    fig.colorbar(image, ax=ax, shrink=0.8)
    return _finish(fig, path)
