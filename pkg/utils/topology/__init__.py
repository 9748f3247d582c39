"""Simplicial complexes, filtrations and persistent homology."""

from utils.topology.filtration import (
    Filtration,
    as_point_cloud,
    build_filtration,
    delaunay_2d,
    vietoris_rips_filtration,
    weak_alpha_filtration,
)
from utils.topology.persistence import (
    DiagramPoint,
    PersistenceDiagram,
    PersistencePairing,
    bottleneck_distance,
    diagrams,
    diagrams_from_cloud,
    reduce,
    representative_cycle,
)
from utils.topology.simplicial import Simplex, SimplicialComplex, betti_numbers, boundary_matrix, close_complex, rank_f2

__all__ = [
    "DiagramPoint",
    "Filtration",
    "PersistenceDiagram",
    "PersistencePairing",
    "Simplex",
    "SimplicialComplex",
    "as_point_cloud",
    "betti_numbers",
    "bottleneck_distance",
    "boundary_matrix",
    "build_filtration",
    "close_complex",
    "delaunay_2d",
    "diagrams",
    "diagrams_from_cloud",
    "rank_f2",
    "reduce",
    "representative_cycle",
    "vietoris_rips_filtration",
    "weak_alpha_filtration",
]
