"""Embedding losses, their gradients and the objectives the optimizer drives."""

from typing import Optional, Union

import numpy as np

from utils.embedders.base import (
    EmbeddingObjective,
    EmbeddingState,
    FreeCoordinates,
    GraphData,
    LinearProjection,
    initial_graph_embedding,
)
from utils.embedders.graph import (
    DeepWalkObjective,
    InnerProductObjective,
    deepwalk_loss_grad,
    inner_product_graph_loss_grad,
    random_walks,
    skipgram_samples,
)
from utils.embedders.pca import PCAObjective, pca_loss_grad, stiefel_step
from utils.embedders.umap_like import UmapLikeObjective, knn_graph, smooth_knn_dist, umap_like_loss_grad
from utils.exceptions import UsageError
from utils.models import EmbedderKind, NeighborConfig, WalkConfig


def make_objective(
    kind: EmbedderKind,
    data: Union[np.ndarray, GraphData],
    dim: int = 2,
    neighbors: Optional[NeighborConfig] = None,
    walks: Optional[WalkConfig] = None,
    init: str = "random",
) -> EmbeddingObjective:
    """Build the objective for an embedder kind.

    Raises:
        UsageError: If the data kind does not fit the embedder
    """
    kind = EmbedderKind(kind)
    if kind.needs_graph != isinstance(data, GraphData):
        raise UsageError(f"Embedder '{kind.value}' cannot embed {type(data).__name__}")
    if kind is EmbedderKind.PCA:
        return PCAObjective(data, dim, init=init)
    if kind is EmbedderKind.UMAP:
        return UmapLikeObjective(data, dim, neighbors)
    if kind is EmbedderKind.INNER_PRODUCT:
        return InnerProductObjective(data, dim)
    return DeepWalkObjective(data, dim, walks)


__all__ = [
    "DeepWalkObjective",
    "EmbeddingObjective",
    "EmbeddingState",
    "FreeCoordinates",
    "GraphData",
    "InnerProductObjective",
    "LinearProjection",
    "PCAObjective",
    "UmapLikeObjective",
    "deepwalk_loss_grad",
    "initial_graph_embedding",
    "inner_product_graph_loss_grad",
    "knn_graph",
    "make_objective",
    "pca_loss_grad",
    "random_walks",
    "skipgram_samples",
    "smooth_knn_dist",
    "stiefel_step",
    "umap_like_loss_grad",
]
