"""A small neighbor embedding in the style of UMAP.

Attraction along a fixed, fuzzily symmetrized kNN graph and repulsion from uniformly
sampled negatives, both through the Cauchy kernel q = 1 / (1 + |e_i - e_j|^2).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse
from sklearn.decomposition import PCA
from sklearn.neighbors import NearestNeighbors

from utils.embedders.base import EmbeddingObjective, EmbeddingState, jitter
from utils.exceptions import ConfigurationError, UsageError
from utils.models import NeighborConfig

logger = logging.getLogger(__name__)

SMOOTH_K_TOLERANCE = 1e-5
REPULSION_EPSILON = 1e-3


@dataclass
class NeighborGraph:
    """Undirected weighted kNN graph: edge e joins heads[e] < tails[e] with weight weights[e]."""

    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    n_nodes: int

    @property
    def n_edges(self) -> int:
        return len(self.heads)


def smooth_knn_dist(distances: np.ndarray, n_iter: int = 64) -> Tuple[np.ndarray, np.ndarray]:
    """Per-point (sigma, rho) such that sum_j exp(-max(d_ij - rho_i, 0) / sigma_i) = log2(k).

    Args:
        distances: (n, k) sorted distances to each point's k nearest neighbors (self excluded)
        n_iter: Binary-search iterations

    Returns:
        sigmas, rhos
    """
    n, k = distances.shape
    target = np.log2(k) if k > 1 else 1.0
    rhos = np.zeros(n)
    sigmas = np.ones(n)
    mean_distance = float(np.mean(distances)) if distances.size else 1.0
    for i in range(n):
        row = distances[i]
        positive = row[row > 0]
        rhos[i] = positive[0] if len(positive) else 0.0
        shifted = np.maximum(row - rhos[i], 0.0)
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(n_iter):
            total = float(np.sum(np.exp(-shifted / mid)))
            if abs(total - target) < SMOOTH_K_TOLERANCE:
                break
            if total > target:
                hi = mid
                mid = (lo + hi) / 2
            else:
                lo = mid
                mid = mid * 2 if np.isinf(hi) else (lo + hi) / 2
        sigmas[i] = max(mid, 1e-3 * (float(np.mean(row)) if rhos[i] > 0 else mean_distance))
    return sigmas, rhos


def knn_graph(X: np.ndarray, n_neighbors: int = 15) -> NeighborGraph:
    """Fuzzy kNN graph of X with weights exp(-(d_ij - rho_i) / sigma_i), symmetrized by probabilistic union.

    Raises:
        ConfigurationError: If n_neighbors >= n
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n_neighbors >= n:
        raise ConfigurationError(f"n_neighbors={n_neighbors} must be smaller than the number of points ({n})")
    distances, indices = NearestNeighbors(n_neighbors=n_neighbors).fit(X).kneighbors()
    sigmas, rhos = smooth_knn_dist(distances)
    values = np.exp(-np.maximum(distances - rhos[:, None], 0.0) / sigmas[:, None])
    rows = np.repeat(np.arange(n), n_neighbors)
    directed = scipy.sparse.coo_matrix((values.ravel(), (rows, indices.ravel())), shape=(n, n)).tocsr()
    transpose = directed.T.tocsr()
    union = (directed + transpose - directed.multiply(transpose)).tocoo()
    upper = union.row < union.col
    order = np.lexsort((union.col[upper], union.row[upper]))
    return NeighborGraph(
        heads=union.row[upper][order].astype(int),
        tails=union.col[upper][order].astype(int),
        weights=np.asarray(union.data[upper][order], dtype=float),
        n_nodes=n,
    )


def sample_negatives(graph: NeighborGraph, n_negatives: int, seed: Optional[int]) -> np.ndarray:
    """(n_edges, n_negatives) node indices drawn uniformly for the head of every edge."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, graph.n_nodes, size=(graph.n_edges, n_negatives))


def umap_like_loss_grad(
    E: np.ndarray,
    graph: NeighborGraph,
    negative_seed: Optional[int] = None,
    n_negatives: int = 5,
    negatives: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """Attraction/repulsion loss of an embedding and its gradient.

    Each edge (i, j) with weight w contributes w * log(1 + |e_i - e_j|^2) and, for each
    negative sample k of its head, -w * log(1 - q_ik + eps). The total is divided by n.

    Args:
        E: (n, d) embedding
        graph: kNN graph built once from the data
        negative_seed: Seed for the negative samples
        n_negatives: Negatives per edge
        negatives: Frozen negative samples to use instead of drawing them

    Returns:
        (loss, gradient on E)
    """
    E = np.asarray(E, dtype=float)
    if E.shape[0] != graph.n_nodes:
        raise UsageError(f"Embedding has {E.shape[0]} rows but the graph has {graph.n_nodes} nodes")
    if negatives is None:
        negatives = sample_negatives(graph, n_negatives, negative_seed)
    n = graph.n_nodes
    gradient = np.zeros_like(E)
    heads, tails, weights = graph.heads, graph.tails, graph.weights

    delta = E[heads] - E[tails]
    squared = np.sum(delta**2, axis=1)
    loss = float(np.sum(weights * np.log1p(squared)))
    pull = (2 * weights / (1 + squared))[:, None] * delta
    np.add.at(gradient, heads, pull)
    np.add.at(gradient, tails, -pull)

    if negatives.size:
        owners = np.repeat(heads, negatives.shape[1])
        scale = np.repeat(weights, negatives.shape[1])
        others = negatives.ravel()
        valid = others != owners
        owners, others, scale = owners[valid], others[valid], scale[valid]
        delta = E[owners] - E[others]
        squared = np.sum(delta**2, axis=1)
        q = 1 / (1 + squared)
        loss -= float(np.sum(scale * np.log(1 - q + REPULSION_EPSILON)))
        # d/ds of -log(1 - q + eps) with q = 1 / (1 + s)
        slope = -scale * q**2 / (1 - q + REPULSION_EPSILON)
        push = (2 * slope)[:, None] * delta
        np.add.at(gradient, owners, push)
        np.add.at(gradient, others, -push)

    return loss / n, gradient / n


class UmapLikeObjective(EmbeddingObjective):
    """Free 2D coordinates fitted to the kNN graph of the data."""

    def __init__(self, X: np.ndarray, dim: int = 2, config: Optional[NeighborConfig] = None):
        super().__init__(dim)
        self.X = np.asarray(X, dtype=float)
        self.config = config or NeighborConfig()
        self.graph = knn_graph(self.X, self.config.n_neighbors)
        logger.info("kNN graph: %d nodes, %d edges", self.graph.n_nodes, self.graph.n_edges)

    @property
    def n_points(self) -> int:
        return self.X.shape[0]

    def initial_state(self, seed: Optional[int] = None) -> EmbeddingState:
        if min(self.X.shape) >= self.dim:
            start = PCA(n_components=self.dim, svd_solver="full").fit_transform(self.X)
            start = start / max(float(np.std(start)), 1e-12)
        else:
            start = np.random.default_rng(seed).standard_normal((self.n_points, self.dim))
        return EmbeddingState.free(jitter(start, seed))

    def loss_grad(self, state: EmbeddingState, seed: Optional[int] = None) -> Tuple[float, np.ndarray]:
        return umap_like_loss_grad(state.coordinates, self.graph, seed, self.config.negatives)
