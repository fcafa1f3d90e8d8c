"""Figure rendering for the CLI report paths.

Renders prediction distributions and the scaling-experiment trend to PNG
files next to the JSON/CSV outputs. Uses the Agg backend; output bytes
carry no timestamps, so identical inputs give identical files.
"""

from __future__ import annotations

import os
from collections.abc import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ERROR_THRESHOLDS, TOP_N_LEVELS, EvalReport
from .predictor import CategoricalPrediction, ContinuousPrediction

_SAVE_KWARGS = {"dpi": 110, "metadata": {"Software": "qtriage"}}


def plot_categorical(
    pred: CategoricalPrediction, path: str | os.PathLike, query: str | None = None, max_bars: int = 15
) -> None:
    """Bar chart of the ranked category distribution."""
    shares = pred.ranked[:max_bars]
    fig, ax = plt.subplots(figsize=(7, 4))
    positions = np.arange(len(shares))
    ax.bar(positions, [s.probability for s in shares], color="#4878a8")
    ax.set_xticks(positions)
    ax.set_xticklabels([s.category for s in shares], rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("probability")
    title = f"{pred.label_name} over top-{pred.support} neighbors"
    if query:
        title += f"\nquery: {query!r}"
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_continuous(
    pred: ContinuousPrediction, path: str | os.PathLike, query: str | None = None, bins: int = 10
) -> None:
    """Histogram of the neighbor values with the predicted median marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(pred.samples, bins=bins, color="#4878a8", edgecolor="white")
    ax.axvline(pred.median, color="#c44e52", linewidth=2, label=f"median = {pred.median:g}")
    ax.set_xlabel(f"{pred.label_name} (units)")
    ax.set_ylabel("neighbors")
    title = f"{pred.label_name} over top-{pred.support} neighbors"
    if query:
        title += f"\nquery: {query!r}"
    ax.set_title(title, fontsize=10)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_scaling(reports: Sequence[EvalReport], path: str | os.PathLike) -> None:
    """Accuracy and error-threshold curves against repository size."""
    sizes = [r.size for r in reports]
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    for n in TOP_N_LEVELS:
        left.plot(sizes, [r.top_n_accuracy[n] for r in reports], marker="o", label=f"top-{n}")
    left.set_xlabel("repository size")
    left.set_ylabel("accuracy (%)")
    left.set_title("categorical")
    left.legend(fontsize=8)
    for t in ERROR_THRESHOLDS:
        right.plot(sizes, [r.within_err[t] for r in reports], marker="o", label=f"< {t} units")
    right.set_xlabel("repository size")
    right.set_ylabel("contacts within error (%)")
    right.set_title("continuous")
    right.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
