"""Persistent homology: boundary-matrix reduction, diagrams, bottleneck distance and cycle representatives."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from utils.exceptions import CycleNotFoundError, UsageError
from utils.models import FiltrationKind, FiltrationSpec
from utils.topology.filtration import Filtration, Witness, build_filtration
from utils.topology.simplicial import Simplex

logger = logging.getLogger(__name__)


@dataclass
class PersistencePairing:
    """Outcome of the reduction: (birth, death) index pairs and unpaired (essential) indices.

    Indices refer to positions in `filtration`. `columns` keeps the reduced boundary
    column of every death simplex, which is the representative cycle of its class.
    """

    filtration: Filtration
    pairs: List[Tuple[int, int]]
    essential: List[int]
    columns: Dict[int, Set[int]] = field(repr=False)

    def simplex_pairs(self) -> List[Tuple[Simplex, Simplex, int]]:
        """(birth simplex, death simplex, homology dimension) for every pair."""
        simplices = self.filtration.simplices
        return [(simplices[b], simplices[d], simplices[b].dim) for b, d in self.pairs]

    def essential_simplices(self) -> List[Tuple[Simplex, int]]:
        simplices = self.filtration.simplices
        return [(simplices[i], simplices[i].dim) for i in self.essential]


def _boundary_columns(filtration: Filtration) -> List[List[int]]:
    index = filtration.index
    return [sorted(index[facet] for facet in simplex.facets()) for simplex in filtration.simplices]


def reduce(filtration: Filtration, clearing: bool = False) -> PersistencePairing:
    """Reduce the filtered boundary matrix over F2 and read off the persistence pairing.

    Args:
        filtration: A face-ordered, monotone filtration
        clearing: Process dimensions top-down and zero out columns of simplices already known
            to be paired as births. The pairing is identical either way.

    Returns:
        The persistence pairing

    Raises:
        OrderingError: If the filtration is not face-ordered and monotone
    """
    filtration.check_monotone()
    boundaries = _boundary_columns(filtration)
    dims = [simplex.dim for simplex in filtration.simplices]

    if clearing:
        order = [j for k in range(max(dims, default=0), -1, -1) for j in range(len(dims)) if dims[j] == k]
    else:
        order = list(range(len(dims)))

    low_to_column: Dict[int, int] = {}
    reduced: Dict[int, Set[int]] = {}
    cleared: Set[int] = set()
    for j in order:
        if j in cleared:
            continue
        current = set(boundaries[j])
        while current:
            low = max(current)
            other = low_to_column.get(low)
            if other is None:
                break
            current ^= reduced[other]
        if current:
            low = max(current)
            low_to_column[low] = j
            reduced[j] = current
            if clearing:
                cleared.add(low)

    pairs = sorted((low, j) for low, j in low_to_column.items())
    births = set(low_to_column)
    essential = [i for i in range(len(dims)) if i not in reduced and i not in births]
    logger.debug("Reduced %d columns: %d pairs, %d essential", len(dims), len(pairs), len(essential))
    return PersistencePairing(filtration, pairs, essential, reduced)


@dataclass(frozen=True)
class DiagramPoint:
    """A diagram point with back-references to the simplices and witnesses that create it."""

    birth: float
    death: float
    birth_index: int
    death_index: Optional[int]
    birth_simplex: Simplex
    death_simplex: Optional[Simplex]
    birth_witness: Witness
    death_witness: Witness

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    @property
    def midlife(self) -> float:
        return (self.death + self.birth) / 2

    @property
    def is_essential(self) -> bool:
        return self.death_index is None


def _rank_key(point: DiagramPoint):
    return (-point.persistence, point.birth, point.birth_witness or (), point.death_witness or (), point.birth_index)


@dataclass
class PersistenceDiagram:
    """Points of one homology dimension: regular (finite death) and essential (death = inf)."""

    dim: int
    regular: List[DiagramPoint] = field(default_factory=list)
    essential: List[DiagramPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.regular) + len(self.essential)

    def ranked(self, with_essential: bool = False) -> List[DiagramPoint]:
        """Regular points by persistence descending (ties: birth, then witnesses).

        With `with_essential`, the essential points come first, so on D0 the single
        essential component takes rank 1.
        """
        finite = sorted(self.regular, key=_rank_key)
        if not with_essential:
            return finite
        return sorted(self.essential, key=lambda p: (p.birth, p.birth_index)) + finite

    def pairs_array(self) -> np.ndarray:
        """(m, 2) array of regular (birth, death) values."""
        if not self.regular:
            return np.empty((0, 2))
        return np.array([[p.birth, p.death] for p in self.regular])

    def essential_births(self) -> List[float]:
        return sorted(p.birth for p in self.essential)

    def persistences(self) -> np.ndarray:
        return np.array(sorted((p.persistence for p in self.regular), reverse=True))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "regular": [[p.birth, p.death] for p in self.regular],
            "essential": self.essential_births(),
            "pairs": [[list(p.birth_simplex.vertices), list(p.death_simplex.vertices)] for p in self.regular],
        }

    @classmethod
    def from_values(
        cls, dim: int, regular: Sequence[Tuple[float, float]] = (), essential: Sequence[float] = ()
    ) -> "PersistenceDiagram":
        """Build a diagram from bare values, without simplex back-references."""
        placeholder = Simplex((0,))
        points = [
            DiagramPoint(float(b), float(d), position, position, placeholder, placeholder, None, None)
            for position, (b, d) in enumerate(regular)
        ]
        essentials = [
            DiagramPoint(float(b), math.inf, position, None, placeholder, None, None, None)
            for position, b in enumerate(essential)
        ]
        return cls(dim, points, essentials)


def diagrams(filtration: Filtration, pairing: PersistencePairing, max_dim: int) -> List[PersistenceDiagram]:
    """Per-dimension persistence diagrams, zero-persistence pairs dropped.

    Args:
        filtration: The filtration that was reduced
        pairing: Its persistence pairing
        max_dim: Highest homology dimension to report

    Returns:
        [D_0, ..., D_max_dim]
    """
    if pairing.filtration is not filtration:
        raise UsageError("The pairing was computed from a different filtration")
    result = [PersistenceDiagram(k) for k in range(max_dim + 1)]
    simplices, values, witnesses = filtration.simplices, filtration.values, filtration.witnesses
    for b, d in pairing.pairs:
        k = simplices[b].dim
        if k > max_dim or values[d] <= values[b]:
            continue
        result[k].regular.append(
            DiagramPoint(float(values[b]), float(values[d]), b, d, simplices[b], simplices[d], witnesses[b], witnesses[d])
        )
    for i in pairing.essential:
        k = simplices[i].dim
        if k > max_dim:
            continue
        result[k].essential.append(DiagramPoint(float(values[i]), math.inf, i, None, simplices[i], None, witnesses[i], None))
    return result


class PersistenceResult(NamedTuple):
    filtration: Filtration
    pairing: PersistencePairing
    diagrams: List[PersistenceDiagram]


def diagrams_from_cloud(cloud, spec: Optional[FiltrationSpec] = None) -> PersistenceResult:
    """Filtration, reduction and diagrams of a point cloud in one call.

    Args:
        cloud: (n, d) array of distinct points
        spec: Filtration to use (weak Alpha by default)

    Returns:
        The filtration, its pairing and diagrams up to the spec's homology dimension
    """
    spec = spec or FiltrationSpec()
    filtration = build_filtration(cloud, spec)
    pairing = reduce(filtration)
    max_dim = 1 if spec.kind is FiltrationKind.WEAK_ALPHA else spec.max_dim
    return PersistenceResult(filtration, pairing, diagrams(filtration, pairing, max_dim))


def _regular_bottleneck(a: np.ndarray, b: np.ndarray) -> float:
    m, k = len(a), len(b)
    if m + k == 0:
        return 0.0
    size = m + k
    cost = np.full((size, size), np.inf)
    if m and k:
        cost[:m, :k] = np.maximum(np.abs(a[:, None, 0] - b[None, :, 0]), np.abs(a[:, None, 1] - b[None, :, 1]))
    # left rows m.. are diagonal copies of b's points, right columns k.. diagonal copies of a's points
    cost[np.arange(m), k + np.arange(m)] = (a[:, 1] - a[:, 0]) / 2
    cost[m + np.arange(k), np.arange(k)] = (b[:, 1] - b[:, 0]) / 2
    cost[m:, k:] = 0.0

    candidates = np.unique(cost[np.isfinite(cost)])

    def perfect(threshold: float) -> bool:
        rows, cols = np.nonzero(cost <= threshold)
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
        matching = maximum_bipartite_matching(graph, perm_type="column")
        return bool(np.all(matching >= 0))

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if perfect(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram) -> float:
    """Exact bottleneck distance between two diagrams of the same dimension.

    Essential points are matched only with essential points (inf - inf = 0); regular
    points may be matched with the diagonal at cost (d - b) / 2.

    Raises:
        UsageError: If the diagrams have different homology dimensions
    """
    if a.dim != b.dim:
        raise UsageError(f"Cannot compare diagrams of dimensions {a.dim} and {b.dim}")
    births_a, births_b = a.essential_births(), b.essential_births()
    if len(births_a) != len(births_b):
        return math.inf
    essential_cost = max((abs(x - y) for x, y in zip(births_a, births_b)), default=0.0)
    return max(essential_cost, _regular_bottleneck(a.pairs_array(), b.pairs_array()))


def representative_cycle(filtration: Filtration, pairing: PersistencePairing, which: int = 1) -> List[Tuple[int, int]]:
    """Edges of a cycle representing a regular D1 point.

    Args:
        filtration: The reduced filtration
        pairing: Its pairing
        which: 1-based rank of the D1 point by persistence

    Returns:
        Sorted vertex pairs of one closed loop: the largest connected component of the
        reduced boundary column of the point's death simplex

    Raises:
        CycleNotFoundError: If D1 has fewer than `which` regular points
    """
    if which < 1:
        raise UsageError("which is a 1-based rank")
    ranked = diagrams(filtration, pairing, 1)[1].ranked()
    if len(ranked) < which:
        raise CycleNotFoundError(f"D1 has {len(ranked)} regular points; rank {which} was requested")
    column = pairing.columns[ranked[which - 1].death_index]
    edges = [filtration.simplices[row].vertices for row in column]

    graph = nx.Graph()
    graph.add_edges_from(edges)
    components = sorted(
        nx.connected_components(graph), key=lambda nodes: (-graph.subgraph(nodes).number_of_edges(), min(nodes))
    )
    if len(components) > 1:
        logger.debug("Cycle representative has %d loops; keeping the largest", len(components))
    return sorted(tuple(sorted(edge)) for edge in graph.subgraph(components[0]).edges())
