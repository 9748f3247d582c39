"""Vietoris-Rips and weak Alpha filtrations of point clouds.

Every simplex of dimension >= 1 carries a witness: the vertex pair realizing its
diameter. Filtration values are witness distances, so derivatives of a value with
respect to the point coordinates only involve the two witness points.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import Delaunay
from scipy.spatial.distance import pdist, squareform

from utils.config import get_settings
from utils.exceptions import DuplicatePointError, EmptyCloudError, OrderingError, ResourceLimitError, UsageError
from utils.models import FiltrationKind, FiltrationSpec
from utils.topology.simplicial import Simplex, SimplexLike, SimplicialComplex, as_simplex, close_complex

try:
    from scipy.spatial import QhullError
except ImportError:  # scipy < 1.8
    from scipy.spatial.qhull import QhullError

logger = logging.getLogger(__name__)

Witness = Optional[Tuple[int, int]]


def as_point_cloud(points, dim: Optional[int] = None, distinct: bool = False) -> np.ndarray:
    """Validate and convert coordinates to an (n, d) float array.

    Args:
        points: Array-like of shape (n, d)
        dim: Required ambient dimension, if any
        distinct: Reject exact duplicate points

    Returns:
        The cloud as a float64 array

    Raises:
        EmptyCloudError: If there are no points
        UsageError: If the shape or dimension is wrong or coordinates are not finite
        DuplicatePointError: If `distinct` and two points coincide
    """
    cloud = np.asarray(points, dtype=float)
    if cloud.ndim == 1 and cloud.size == 0:
        raise EmptyCloudError("The point cloud is empty")
    if cloud.ndim != 2:
        raise UsageError(f"A point cloud must be a 2D array, got shape {cloud.shape}")
    if cloud.shape[0] == 0:
        raise EmptyCloudError("The point cloud is empty")
    if cloud.shape[1] == 0:
        raise UsageError("Points need at least one coordinate")
    if dim is not None and cloud.shape[1] != dim:
        raise UsageError(f"Expected {dim}-dimensional points, got {cloud.shape[1]}")
    if not np.all(np.isfinite(cloud)):
        raise UsageError("Point coordinates must be finite")
    if distinct and np.unique(cloud, axis=0).shape[0] < cloud.shape[0]:
        raise DuplicatePointError("The point cloud contains exact duplicate points; jitter them first")
    return cloud


class FilteredSimplex(NamedTuple):
    simplex: Simplex
    value: float
    witness: Witness


def _entry_key(entry: Tuple[Simplex, float, Witness]):
    simplex, value, _ = entry
    return (value, simplex.dim, simplex.vertices)


@dataclass
class Filtration:
    """Simplices sorted by (value, dimension, vertices), with values and diameter witnesses."""

    simplices: List[Simplex]
    values: np.ndarray
    witnesses: List[Witness]
    index: Dict[Simplex, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not (len(self.simplices) == len(self.values) == len(self.witnesses)):
            raise UsageError("Filtration simplices, values and witnesses must have equal length")
        self.index = {simplex: position for position, simplex in enumerate(self.simplices)}

    @classmethod
    def from_entries(
        cls, entries: Iterable[Tuple[SimplexLike, float, Witness]], presorted: bool = False
    ) -> "Filtration":
        """Build a filtration from (simplex, value, witness) triples.

        Args:
            entries: Triples in any order (unless `presorted`)
            presorted: Keep the given order instead of sorting by value, dimension and vertices

        Returns:
            The filtration
        """
        items = [(as_simplex(s), float(v), None if w is None else (int(w[0]), int(w[1]))) for s, v, w in entries]
        if not presorted:
            items.sort(key=_entry_key)
        return cls([s for s, _, _ in items], np.array([v for _, v, _ in items]), [w for _, _, w in items])

    @classmethod
    def from_order(cls, simplices: Sequence[SimplexLike], values: Optional[Sequence[float]] = None) -> "Filtration":
        """A combinatorial filtration keeping the given order (values default to positions)."""
        values = list(range(len(simplices))) if values is None else values
        return cls.from_entries(((s, v, None) for s, v in zip(simplices, values)), presorted=True)

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self) -> Iterator[FilteredSimplex]:
        for simplex, value, witness in zip(self.simplices, self.values, self.witnesses):
            yield FilteredSimplex(simplex, float(value), witness)

    def __getitem__(self, position: int) -> FilteredSimplex:
        return FilteredSimplex(self.simplices[position], float(self.values[position]), self.witnesses[position])

    @property
    def n_vertices(self) -> int:
        return sum(1 for s in self.simplices if s.dim == 0)

    def check_monotone(self) -> None:
        """Verify faces precede cofaces and values never decrease along face relations.

        Raises:
            OrderingError: On the first violation found
        """
        for position, simplex in enumerate(self.simplices):
            for facet in simplex.facets():
                face_position = self.index.get(facet)
                if face_position is None:
                    raise OrderingError(f"Face {facet} of {simplex} is missing from the filtration")
                if face_position > position:
                    raise OrderingError(f"Face {facet} appears after its coface {simplex}")
                if self.values[face_position] > self.values[position]:
                    raise OrderingError(f"Face {facet} has a larger value than its coface {simplex}")

    def complex(self) -> SimplicialComplex:
        return SimplicialComplex(frozenset(self.simplices))

    def sublevel(self, value: float) -> SimplicialComplex:
        """The complex of all simplices with filtration value <= `value`."""
        return SimplicialComplex(frozenset(s for s, v in zip(self.simplices, self.values) if v <= value))


def _path_complex(cloud: np.ndarray) -> SimplicialComplex:
    centered = cloud - cloud.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    order = np.argsort(centered @ vt[0], kind="stable")
    edges = [(int(a), int(b)) for a, b in zip(order[:-1], order[1:])]
    return close_complex([(v,) for v in range(len(cloud))] + edges)


def _is_collinear(cloud: np.ndarray) -> bool:
    centered = cloud - cloud.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    return singular[0] == 0 or singular[1] <= 1e-12 * singular[0]


def delaunay_2d(cloud) -> SimplicialComplex:
    """Delaunay triangulation of a planar point cloud as a simplicial complex.

    Args:
        cloud: (n, 2) array of distinct points

    Returns:
        All vertices, edges and triangles of the triangulation. Fewer than three points
        give the complete complex; collinear points give the path along the line.

    Raises:
        DuplicatePointError: If two points coincide
    """
    points = as_point_cloud(cloud, dim=2, distinct=True)
    n = len(points)
    if n < 3:
        return close_complex([tuple(range(n))])
    if _is_collinear(points):
        logger.info("All %d points are collinear; using the path complex", n)
        return _path_complex(points)
    try:
        triangulation = Delaunay(points)
    except QhullError as e:
        logger.warning("Qhull failed (%s); falling back to the path complex", e)
        return _path_complex(points)
    if len(triangulation.coplanar):
        logger.warning("%d points were left out of the triangulation as near-duplicates", len(triangulation.coplanar))
    generators = [(v,) for v in range(n)] + [tuple(int(v) for v in tri) for tri in triangulation.simplices]
    return close_complex(generators)


def _diameter(simplex: Simplex, distance) -> Tuple[float, Witness]:
    best_value = -1.0
    best_pair: Witness = None
    for a, b in combinations(simplex.vertices, 2):
        d = distance(a, b)
        if d > best_value:
            best_value, best_pair = d, (a, b)
    return best_value, best_pair


def weak_alpha_filtration(cloud) -> Filtration:
    """Diameter filtration on the Delaunay triangulation of a planar cloud.

    Args:
        cloud: (n, 2) array of distinct points

    Returns:
        Filtration whose values are simplex diameters with lexicographically smallest argmax witnesses
    """
    points = as_point_cloud(cloud, dim=2, distinct=True)
    complex_ = delaunay_2d(points)
    lengths: Dict[Tuple[int, int], float] = {}
    for edge in complex_.of_dim(1):
        a, b = edge.vertices
        lengths[(a, b)] = float(np.linalg.norm(points[a] - points[b]))

    def distance(a: int, b: int) -> float:
        return lengths[(a, b)]

    entries = []
    for simplex in complex_.simplices:
        if simplex.dim == 0:
            entries.append((simplex, 0.0, None))
        else:
            value, witness = _diameter(simplex, distance)
            entries.append((simplex, value, witness))
    return Filtration.from_entries(entries)


def rips_simplex_count(n: int, max_dim: int) -> int:
    """Number of simplices of dimension 0..max_dim+1 on n points."""
    return sum(math.comb(n, size) for size in range(1, max_dim + 3))


def vietoris_rips_filtration(cloud, max_dim: int = 1, max_simplices: Optional[int] = None) -> Filtration:
    """Vietoris-Rips filtration with every simplex of dimension 0..max_dim+1.

    Args:
        cloud: (n, d) array of distinct points
        max_dim: Highest homology dimension of interest
        max_simplices: Simplex budget (defaults to TOPOFLUX_MAX_SIMPLICES)

    Returns:
        The filtration

    Raises:
        ResourceLimitError: If the number of simplices exceeds the budget
    """
    if max_dim < 1:
        raise UsageError("max_dim must be at least 1")
    points = as_point_cloud(cloud, distinct=True)
    n = len(points)
    limit = get_settings().max_simplices if max_simplices is None else max_simplices
    count = rips_simplex_count(n, max_dim)
    if count > limit:
        raise ResourceLimitError(
            f"Vietoris-Rips on {n} points up to dimension {max_dim + 1} needs {count} simplices (limit {limit})",
            count=count,
            limit=limit,
        )

    distances = squareform(pdist(points)) if n > 1 else np.zeros((1, 1))
    entries: List[Tuple[Simplex, float, Witness]] = [(Simplex((v,)), 0.0, None) for v in range(n)]
    for size in range(2, min(max_dim + 2, n) + 1):
        tuples = np.array(list(combinations(range(n), size)), dtype=int)
        pairs = list(combinations(range(size), 2))
        pair_lengths = np.stack([distances[tuples[:, a], tuples[:, b]] for a, b in pairs], axis=1)
        # argmax returns the first maximum, i.e. the lexicographically smallest pair
        best = np.argmax(pair_lengths, axis=1)
        for row, column in zip(tuples, best):
            a, b = pairs[column]
            entries.append((Simplex(tuple(int(v) for v in row)), float(distances[row[a], row[b]]), (int(row[a]), int(row[b]))))
    return Filtration.from_entries(entries)


def build_filtration(cloud, spec: Optional[FiltrationSpec] = None) -> Filtration:
    """Build the filtration named by a FiltrationSpec (weak Alpha by default)."""
    spec = spec or FiltrationSpec()
    if spec.kind is FiltrationKind.WEAK_ALPHA:
        return weak_alpha_filtration(cloud)
    return vietoris_rips_filtration(cloud, max_dim=spec.max_dim)
