"""Circular pseudotime from a 2D embedding.

The most persistent cycle of the weak Alpha filtration is turned into a closed polygon,
every point is projected onto its nearest polygon segment, and the arc-length position
of the projection is rescaled to [0, 2pi).
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from utils.exceptions import CycleNotFoundError, UsageError
from utils.models import FiltrationSpec
from utils.topology.filtration import as_point_cloud
from utils.topology.persistence import diagrams_from_cloud, representative_cycle

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


def order_loop(edges: Sequence[Tuple[int, int]]) -> List[int]:
    """Order cycle edges into a vertex loop.

    Starts at the smallest vertex and heads toward its smaller neighbor. If the edges do
    not form a single simple cycle, the longest cycle of a cycle basis is used.

    Raises:
        CycleNotFoundError: If the edges contain no cycle
    """
    graph = nx.Graph()
    graph.add_edges_from((int(u), int(v)) for u, v in edges)
    cycles = nx.cycle_basis(graph)
    if not cycles:
        raise CycleNotFoundError("The edges do not contain a cycle")
    if len(cycles) > 1 or any(degree != 2 for _, degree in graph.degree()):
        logger.info("Cycle representative is not a simple loop; using the longest of %d basis cycles", len(cycles))
    loop = min(cycles, key=lambda cycle: (-len(cycle), min(cycle)))
    start = loop.index(min(loop))
    loop = loop[start:] + loop[:start]
    if loop[-1] < loop[1]:
        loop = [loop[0]] + loop[:0:-1]
    return loop


@dataclass
class CycleModel:
    """A closed polygon through embedded points; edge e joins loop[e] and loop[(e + 1) % m]."""

    loop: np.ndarray
    vertices: np.ndarray
    lengths: np.ndarray = field(init=False)
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        self.loop = np.asarray(self.loop, dtype=int)
        self.vertices = np.asarray(self.vertices, dtype=float)
        if len(self.loop) < 3:
            raise UsageError("A cycle needs at least 3 vertices")
        segments = np.roll(self.vertices, -1, axis=0) - self.vertices
        self.lengths = np.linalg.norm(segments, axis=1)
        if np.any(self.lengths == 0):
            raise UsageError("Cycle edges must have positive length")
        self.cumulative = np.concatenate([[0.0], np.cumsum(self.lengths)[:-1]])

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    @property
    def n_edges(self) -> int:
        return len(self.loop)

    def edges(self) -> List[Tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(self.loop, np.roll(self.loop, -1))]

    @classmethod
    def from_loop(cls, E: np.ndarray, loop: Sequence[int]) -> "CycleModel":
        E = np.asarray(E, dtype=float)
        return cls(np.asarray(loop, dtype=int), E[list(loop)])


def extract_cycle_model(E, which: int = 1) -> CycleModel:
    """Cycle model of the `which`-th most persistent D1 point of the weak Alpha filtration.

    Raises:
        CycleNotFoundError: If D1 has no such point (e.g. collinear input)
    """
    points = as_point_cloud(E, dim=2, distinct=True)
    result = diagrams_from_cloud(points, FiltrationSpec())
    edges = representative_cycle(result.filtration, result.pairing, which)
    return CycleModel.from_loop(points, order_loop(edges))


@dataclass
class CycleProjection:
    """Per point: nearest edge, position t in [0, 1] along it, projected point and distance."""

    edge: np.ndarray
    t: np.ndarray
    points: np.ndarray
    distance: np.ndarray


def project_onto_cycle(E, model: CycleModel) -> CycleProjection:
    """Clamped orthogonal projection of every point onto its nearest cycle segment (ties: lowest edge)."""
    E = np.asarray(E, dtype=float)
    starts = model.vertices
    directions = np.roll(model.vertices, -1, axis=0) - starts
    offsets = E[:, None, :] - starts[None, :, :]
    t = np.clip(np.sum(offsets * directions[None], axis=2) / np.sum(directions**2, axis=1)[None], 0.0, 1.0)
    projected = starts[None] + t[..., None] * directions[None]
    squared = np.sum((E[:, None, :] - projected) ** 2, axis=2)
    edge = np.argmin(squared, axis=1)
    rows = np.arange(len(E))
    return CycleProjection(edge, t[rows, edge], projected[rows, edge], np.sqrt(squared[rows, edge]))


def circular_pseudotimes(projection: CycleProjection, model: CycleModel) -> np.ndarray:
    """2pi times the arc-length position of each projected point over the cycle length, in [0, 2pi)."""
    arc = model.cumulative[projection.edge] + projection.t * model.lengths[projection.edge]
    times = np.mod(TWO_PI * arc / model.total_length, TWO_PI)
    times[times >= TWO_PI] = 0.0
    return times


def infer_pseudotime(E, model: Optional[CycleModel] = None) -> pd.DataFrame:
    """Full pipeline: cycle extraction, projection and pseudotimes as a table.

    Returns:
        DataFrame with columns point, pseudotime, edge, t
    """
    model = model or extract_cycle_model(E)
    projection = project_onto_cycle(E, model)
    times = circular_pseudotimes(projection, model)
    return pd.DataFrame({"point": np.arange(len(times)), "pseudotime": times, "edge": projection.edge, "t": projection.t})
