"""
Topoflux - Core Library

Persistent homology, differentiable topological losses and topologically
regularized embeddings.
"""

__version__ = "1.0.0"

from utils.embedders import EmbeddingState, FreeCoordinates, GraphData, make_objective
from utils.models import (
    EmbedderKind,
    ExperimentConfig,
    FiltrationKind,
    FiltrationSpec,
    LossTerm,
    RunConfig,
    RunMode,
    TopoLossSpec,
)
from utils.optimizer import RunTrace, compare_modes, fit, run
from utils.topo_loss import eval_spec, eval_term, full_loss
from utils.topology import bottleneck_distance, diagrams_from_cloud

__all__ = [
    "EmbedderKind",
    "EmbeddingState",
    "ExperimentConfig",
    "FiltrationKind",
    "FiltrationSpec",
    "FreeCoordinates",
    "GraphData",
    "LossTerm",
    "RunConfig",
    "RunMode",
    "RunTrace",
    "TopoLossSpec",
    "bottleneck_distance",
    "compare_modes",
    "diagrams_from_cloud",
    "eval_spec",
    "eval_term",
    "fit",
    "full_loss",
    "make_objective",
    "run",
]
