"""Graph embedding losses: inner-product Bernoulli model and random-walk skip-gram."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from utils.embedders.base import EmbeddingObjective, EmbeddingState, GraphData, initial_graph_embedding
from utils.exceptions import UsageError
from utils.models import WalkConfig

logger = logging.getLogger(__name__)


def _check_rows(graph: GraphData, E: np.ndarray) -> np.ndarray:
    E = np.asarray(E, dtype=float)
    if E.ndim != 2 or E.shape[0] != graph.n_nodes:
        raise UsageError(f"Embedding of shape {E.shape} does not match a graph with {graph.n_nodes} nodes")
    return E


def inner_product_graph_loss_grad(graph: GraphData, E: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean binary cross-entropy between sigmoid(<e_u, e_v>) and the edge indicator over all pairs u < v.

    Returns:
        (loss, gradient on E)
    """
    E = _check_rows(graph, E)
    n = graph.n_nodes
    if n < 2:
        return 0.0, np.zeros_like(E)
    scores = E @ E.T
    targets = graph.adjacency()
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    n_pairs = n * (n - 1) / 2
    s, y = scores[upper], targets[upper]
    loss = float(np.sum(np.logaddexp(0.0, s) - y * s) / n_pairs)
    coefficients = np.where(upper, expit(scores) - targets, 0.0) / n_pairs
    gradient = (coefficients + coefficients.T) @ E
    return loss, gradient


def random_walks(graph: GraphData, config: WalkConfig, seed: Optional[int] = None) -> List[np.ndarray]:
    """Uniform random walks: walks_per_node walks of walk_length nodes from every node.

    Walks from isolated nodes stop at length 1.
    """
    rng = np.random.default_rng(seed)
    degrees = graph.degrees()
    isolated = int(np.sum(degrees == 0))
    if isolated:
        logger.warning("%d isolated nodes produce walks of length 1", isolated)
    walks = []
    for _ in range(config.walks_per_node):
        for start in range(graph.n_nodes):
            walk = [start]
            while len(walk) < config.walk_length:
                neighbors = graph.neighbors(walk[-1])
                if len(neighbors) == 0:
                    break
                walk.append(int(neighbors[rng.integers(len(neighbors))]))
            walks.append(np.array(walk, dtype=int))
    return walks


@dataclass
class SkipGramSamples:
    """Frozen (center, context) pairs and their negatives; mask marks negatives that count."""

    centers: np.ndarray
    contexts: np.ndarray
    negatives: np.ndarray
    mask: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.centers)


def skipgram_samples(graph: GraphData, config: WalkConfig, seed: Optional[int] = None) -> SkipGramSamples:
    """Walks, context pairs within the window, and unigram^0.75 negatives, all from one seed."""
    rng = np.random.default_rng(seed)
    walks = random_walks(graph, config, int(rng.integers(2**32)))
    centers, contexts = [], []
    for walk in walks:
        for position, center in enumerate(walk):
            low = max(0, position - config.window)
            high = min(len(walk), position + config.window + 1)
            for other in range(low, high):
                if other != position:
                    centers.append(center)
                    contexts.append(walk[other])
    centers = np.array(centers, dtype=int)
    contexts = np.array(contexts, dtype=int)

    counts = np.bincount(np.concatenate(walks), minlength=graph.n_nodes).astype(float) ** 0.75
    probabilities = counts / counts.sum()
    negatives = rng.choice(graph.n_nodes, size=(len(centers), config.negatives), p=probabilities)
    mask = (negatives != centers[:, None]) & (negatives != contexts[:, None])
    return SkipGramSamples(centers, contexts, negatives, mask)


def deepwalk_loss_grad(
    graph: GraphData,
    E: np.ndarray,
    walk_config: Optional[WalkConfig] = None,
    seed: Optional[int] = None,
    samples: Optional[SkipGramSamples] = None,
) -> Tuple[float, np.ndarray]:
    """Skip-gram negative-sampling loss over random-walk context pairs.

    Each pair (c, x) adds -log sigmoid(<e_c, e_x>) - sum over its negatives k of
    log sigmoid(-<e_c, e_k>). The loss is the mean over pairs.

    Args:
        graph: The graph
        E: (n, d) node embedding
        walk_config: Walk and negative-sampling parameters
        seed: Seed for walks and negatives
        samples: Frozen samples to use instead of drawing them

    Returns:
        (loss, gradient on E)
    """
    E = _check_rows(graph, E)
    if samples is None:
        samples = skipgram_samples(graph, walk_config or WalkConfig(), seed)
    gradient = np.zeros_like(E)
    if samples.n_pairs == 0:
        logger.warning("No skip-gram pairs; the graph has no edges")
        return 0.0, gradient

    c, x = samples.centers, samples.contexts
    positive = np.sum(E[c] * E[x], axis=1)
    loss = float(np.sum(np.logaddexp(0.0, -positive)))
    weight = -expit(-positive)[:, None]
    np.add.at(gradient, c, weight * E[x])
    np.add.at(gradient, x, weight * E[c])

    if samples.negatives.size:
        owners = np.repeat(c, samples.negatives.shape[1])
        others = samples.negatives.ravel()
        keep = samples.mask.ravel()
        owners, others = owners[keep], others[keep]
        negative = np.sum(E[owners] * E[others], axis=1)
        loss += float(np.sum(np.logaddexp(0.0, negative)))
        weight = expit(negative)[:, None]
        np.add.at(gradient, owners, weight * E[others])
        np.add.at(gradient, others, weight * E[owners])

    return loss / samples.n_pairs, gradient / samples.n_pairs


class InnerProductObjective(EmbeddingObjective):
    def __init__(self, graph: GraphData, dim: int = 2):
        super().__init__(dim)
        self.graph = graph

    @property
    def n_points(self) -> int:
        return self.graph.n_nodes

    def initial_state(self, seed: Optional[int] = None) -> EmbeddingState:
        return EmbeddingState.free(initial_graph_embedding(self.graph, self.dim, seed))

    def loss_grad(self, state: EmbeddingState, seed: Optional[int] = None) -> Tuple[float, np.ndarray]:
        return inner_product_graph_loss_grad(self.graph, state.coordinates)


class DeepWalkObjective(EmbeddingObjective):
    """Skip-gram over walks regenerated from the per-epoch seed."""

    def __init__(self, graph: GraphData, dim: int = 2, config: Optional[WalkConfig] = None):
        super().__init__(dim)
        self.graph = graph
        self.config = config or WalkConfig()

    @property
    def n_points(self) -> int:
        return self.graph.n_nodes

    def initial_state(self, seed: Optional[int] = None) -> EmbeddingState:
        return EmbeddingState.free(initial_graph_embedding(self.graph, self.dim, seed))

    def loss_grad(self, state: EmbeddingState, seed: Optional[int] = None) -> Tuple[float, np.ndarray]:
        return deepwalk_loss_grad(self.graph, state.coordinates, self.config, seed)
