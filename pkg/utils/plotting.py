"""Static SVG figures: persistence diagrams, embeddings, loss traces and runtimes."""

import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from utils.topology.persistence import PersistenceDiagram  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _save(fig, path: PathLike) -> None:
    fig.savefig(str(path), format="svg", bbox_inches="tight")
    plt.close(fig)
    logger.debug("Wrote %s", path)


def plot_diagram(diagrams: Sequence[PersistenceDiagram], path: PathLike, title: str = "Persistence diagram") -> None:
    """Birth/death scatter per dimension with the diagonal; essential points sit on a dashed 'inf' line."""
    fig, ax = plt.subplots(figsize=(5, 5))
    finite = [p.death for d in diagrams for p in d.regular] + [p.birth for d in diagrams for p in d.regular]
    finite += [p.birth for d in diagrams for p in d.essential]
    top = max(finite, default=1.0) or 1.0
    infinity = top * 1.1
    ax.plot([0, infinity], [0, infinity], color="grey", linewidth=0.8)
    ax.axhline(infinity, color="grey", linestyle="--", linewidth=0.8)
    for diagram in diagrams:
        pairs = diagram.pairs_array()
        label = f"D{diagram.dim}"
        if len(pairs):
            ax.scatter(pairs[:, 0], pairs[:, 1], s=14, label=label)
            label = None
        if diagram.essential:
            births = diagram.essential_births()
            ax.scatter(births, [infinity] * len(births), s=14, marker="^", label=label)
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    ax.set_title(title)
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_embedding(
    E: np.ndarray,
    path: PathLike,
    colors: Optional[np.ndarray] = None,
    cycle: Optional[Sequence[Tuple[int, int]]] = None,
    title: str = "Embedding",
    cmap: str = "viridis",
) -> None:
    """Scatter of the first two embedding coordinates, optionally colored and with a cycle drawn over it."""
    E = np.asarray(E, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 5))
    y = E[:, 1] if E.shape[1] > 1 else np.zeros(len(E))
    points = ax.scatter(E[:, 0], y, c=colors, s=12, cmap=cmap if colors is not None else None)
    if colors is not None and np.issubdtype(np.asarray(colors).dtype, np.number):
        fig.colorbar(points, ax=ax)
    for a, b in cycle or []:
        ax.plot([E[a, 0], E[b, 0]], [y[a], y[b]], color="red", linewidth=1.2)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(title)
    _save(fig, path)


def plot_trace(frame: pd.DataFrame, path: PathLike, title: str = "Losses") -> None:
    """Loss curves (l_emb, l_top, l_tot) against the epoch."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for column in ("l_emb", "l_top", "l_tot"):
        if column in frame and frame[column].notna().any():
            ax.plot(frame["epoch"], frame[column], label=column)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_runtime(frame: pd.DataFrame, path: PathLike) -> None:
    """Log-log runtime against the number of points."""
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(frame["n"], frame["seconds"], marker="o")
    ax.set_xlabel("number of points")
    ax.set_ylabel("seconds")
    ax.set_title("Runtime")
    _save(fig, path)
