"""Embedding state, linear projections and graph containers shared by the embedders."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np
from sklearn.decomposition import PCA

from utils.exceptions import UsageError
from utils.models import Provenance

logger = logging.getLogger(__name__)


def orthonormalize(matrix: np.ndarray) -> np.ndarray:
    """Q factor of a QR decomposition with the diagonal of R made non-negative."""
    q, r = np.linalg.qr(matrix)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs


@dataclass
class LinearProjection:
    """A D x d matrix W with orthonormal columns; the embedding is E = XW."""

    W: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        if self.W.ndim != 2 or self.W.shape[0] < self.W.shape[1]:
            raise UsageError(f"A projection must be D x d with D >= d, got shape {self.W.shape}")

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def is_orthonormal(self, tolerance: float = 1e-8) -> bool:
        return bool(np.allclose(self.W.T @ self.W, np.eye(self.dim), atol=tolerance))

    def project(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.input_dim:
            raise UsageError(f"Data has {X.shape[1]} columns but the projection expects {self.input_dim}")
        return X @ self.W

    @classmethod
    def random(cls, input_dim: int, dim: int, seed: Optional[int] = None) -> "LinearProjection":
        rng = np.random.default_rng(seed)
        return cls(orthonormalize(rng.standard_normal((input_dim, dim))))

    @classmethod
    def from_pca(cls, X: np.ndarray, dim: int) -> "LinearProjection":
        """Top principal directions of X as an orthonormal projection."""
        X = np.asarray(X, dtype=float)
        if dim > min(X.shape):
            raise UsageError(f"Cannot take {dim} principal components of a {X.shape[0]} x {X.shape[1]} matrix")
        components = PCA(n_components=dim, svd_solver="full").fit(X).components_.T
        return cls(orthonormalize(components))


@dataclass
class EmbeddingState:
    """Embedding coordinates, and the projection that produced them for linear embedders."""

    coordinates: np.ndarray
    provenance: Provenance
    projection: Optional[LinearProjection] = None

    def __post_init__(self):
        self.coordinates = np.asarray(self.coordinates, dtype=float)
        if self.provenance is Provenance.LINEAR and self.projection is None:
            raise UsageError("A linear embedding state needs its projection")

    @classmethod
    def linear(cls, X: np.ndarray, projection: LinearProjection) -> "EmbeddingState":
        return cls(projection.project(X), Provenance.LINEAR, projection)

    @classmethod
    def free(cls, coordinates: np.ndarray) -> "EmbeddingState":
        return cls(np.array(coordinates, dtype=float), Provenance.FREE)

    def is_finite(self) -> bool:
        if not np.all(np.isfinite(self.coordinates)):
            return False
        return self.projection is None or bool(np.all(np.isfinite(self.projection.W)))


@dataclass
class GraphData:
    """An undirected simple graph on nodes 0..n_nodes-1, with optional node labels."""

    n_nodes: int
    edges: List[Tuple[int, int]]
    labels: Optional[np.ndarray] = None
    _neighbors: List[np.ndarray] = field(init=False, repr=False, default_factory=list)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise UsageError("A graph needs at least one node")
        normalized = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise UsageError(f"Self-loop on node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise UsageError(f"Edge ({u}, {v}) refers to a node outside 0..{self.n_nodes - 1}")
            normalized.add((min(u, v), max(u, v)))
        self.edges = sorted(normalized)
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if len(self.labels) != self.n_nodes:
                raise UsageError(f"Got {len(self.labels)} labels for {self.n_nodes} nodes")
        adjacency: List[List[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adjacency[u].append(v)
            adjacency[v].append(u)
        self._neighbors = [np.array(sorted(items), dtype=int) for items in adjacency]

    @classmethod
    def from_edges(cls, edges: Iterable[Tuple[int, int]], n_nodes: Optional[int] = None, labels=None) -> "GraphData":
        edges = [(int(u), int(v)) for u, v in edges]
        if n_nodes is None:
            n_nodes = 1 + max((max(u, v) for u, v in edges), default=-1)
        return cls(n_nodes, edges, labels)

    @classmethod
    def from_networkx(cls, graph: nx.Graph, label_attribute: Optional[str] = None) -> "GraphData":
        """Relabel nodes to 0..n-1 in iteration order and copy the edges (and labels)."""
        mapping = {node: position for position, node in enumerate(graph.nodes())}
        edges = [(mapping[u], mapping[v]) for u, v in graph.edges() if u != v]
        labels = None
        if label_attribute is not None:
            labels = np.array([graph.nodes[node][label_attribute] for node in graph.nodes()])
        return cls(len(mapping), edges, labels)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_nodes))
        graph.add_edges_from(self.edges)
        return graph

    def neighbors(self, node: int) -> np.ndarray:
        return self._neighbors[node]

    def degrees(self) -> np.ndarray:
        return np.array([len(items) for items in self._neighbors])

    def adjacency(self) -> np.ndarray:
        matrix = np.zeros((self.n_nodes, self.n_nodes))
        if self.edges:
            rows, cols = np.array(self.edges).T
            matrix[rows, cols] = 1.0
            matrix[cols, rows] = 1.0
        return matrix


def jitter(coordinates: np.ndarray, seed: Optional[int], relative: float = 1e-4) -> np.ndarray:
    """Add tiny seeded noise so coincident coordinates become distinct."""
    rng = np.random.default_rng(seed)
    scale = relative * max(float(np.std(coordinates)), 1.0)
    return coordinates + rng.normal(scale=scale, size=coordinates.shape)


def initial_graph_embedding(graph: GraphData, dim: int = 2, seed: Optional[int] = None) -> np.ndarray:
    """Spectral layout of the graph, jittered so structurally equivalent nodes do not coincide.

    Small graphs fall back to a seeded Gaussian layout.
    """
    if graph.n_nodes <= dim + 1:
        return np.random.default_rng(seed).standard_normal((graph.n_nodes, dim))
    positions = nx.spectral_layout(graph.to_networkx(), dim=dim)
    layout = np.array([positions[node] for node in range(graph.n_nodes)], dtype=float)
    return jitter(layout, seed)


class EmbeddingObjective(ABC):
    """An embedding loss together with how its parameters are initialized and stepped."""

    provenance: Provenance = Provenance.FREE

    def __init__(self, dim: int):
        if dim < 1:
            raise UsageError("The embedding dimension must be positive")
        self.dim = dim

    @property
    @abstractmethod
    def n_points(self) -> int:
        """Number of embedded points."""

    @abstractmethod
    def initial_state(self, seed: Optional[int] = None) -> EmbeddingState:
        """Starting embedding."""

    @abstractmethod
    def loss_grad(self, state: EmbeddingState, seed: Optional[int] = None) -> Tuple[float, np.ndarray]:
        """Loss and its gradient with respect to the optimized parameters (W or E)."""

    def parameters(self, state: EmbeddingState) -> np.ndarray:
        return state.coordinates

    def coordinate_gradient_to_parameters(self, state: EmbeddingState, gradient: np.ndarray) -> np.ndarray:
        """Pull a gradient on the coordinates back to the optimized parameters."""
        return gradient

    def step(self, state: EmbeddingState, direction: np.ndarray, learning_rate: float) -> EmbeddingState:
        """Plain gradient step on free coordinates."""
        return EmbeddingState.free(state.coordinates - learning_rate * direction)


class FreeCoordinates(EmbeddingObjective):
    """The point coordinates themselves, with no embedding loss.

    Used to optimize a cloud for its topological loss alone.
    """

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2:
            raise UsageError(f"Expected an (n, d) array, got shape {points.shape}")
        super().__init__(points.shape[1])
        self.points = points

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def initial_state(self, seed: Optional[int] = None) -> EmbeddingState:
        return EmbeddingState.free(self.points)

    def loss_grad(self, state: EmbeddingState, seed: Optional[int] = None) -> Tuple[float, np.ndarray]:
        return 0.0, np.zeros_like(state.coordinates)
