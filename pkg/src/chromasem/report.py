"""Figure and CSV emission for training runs and evaluation suites.

Everything renders through the Agg backend straight to files; nothing here
opens a window. Callers hand over plain numpy data and paths.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .semantic_map import ClassTable, SemanticMap, load_class_table


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write one delimited report file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow(list(row))
    return path


def save_loss_curve(path: str | Path, losses: Sequence[float], title: str = "training loss") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    steps = np.arange(1, len(losses) + 1)
    ax.plot(steps, losses, lw=1.0)
    if len(losses) > 1 and min(losses) > 0:
        ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_histogram(
    path: str | Path,
    values: np.ndarray,
    title: str,
    xlabel: str,
    bins: int | np.ndarray = 60,
    vline: float | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.asarray(values).ravel(), bins=bins, color="#4878b0")
    ax.set_yscale("log")
    if vline is not None:
        ax.axvline(vline, color="crimson", ls="--", lw=1.0, label=f"bound {vline:g}")
        ax.legend()
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_gradcheck_scatter(
    path: str | Path,
    analytic: np.ndarray,
    numeric: np.ndarray,
    title: str,
) -> Path:
    """Analytic-vs-finite-difference scatter; agreement hugs the diagonal."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(a, n, s=12, alpha=0.6, edgecolors="none")
    lim = float(max(np.abs(a).max(), np.abs(n).max(), 1e-12))
    ax.plot([-lim, lim], [-lim, lim], color="crimson", lw=0.8)
    ax.set_xlabel("analytic gradient")
    ax.set_ylabel("finite-difference gradient")
    ax.set_title(title)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def map_to_rgb(sem: SemanticMap, table: ClassTable | None = None) -> np.ndarray:
    """Render a label map with its class display colors (HxWx3 uint8)."""
    if table is None:
        table = load_class_table()
    lut = np.zeros((max(sem.num_classes, len(table.entries)), 3), dtype=np.uint8)
    for e in table.entries:
        if e.index < lut.shape[0]:
            lut[e.index] = e.color
    return lut[sem.labels]


def save_image_panel(path: str | Path, panels: Sequence[tuple[str, np.ndarray]]) -> Path:
    """Write a single row of labeled images (gray input, map, result, ...)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = max(len(panels), 1)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4))
    if n == 1:
        axes = [axes]
    for ax, (title, img) in zip(axes, panels):
        img = np.asarray(img)
        if img.ndim == 2:
            ax.imshow(img, cmap="gray")
        else:
            ax.imshow(img)
        ax.set_title(title, fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
