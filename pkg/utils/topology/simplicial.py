"""Abstract simplicial complexes, F2 boundary matrices and Betti numbers."""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from utils.exceptions import InvalidSimplexError, OrderingError


@dataclass(frozen=True, order=True)
class Simplex:
    """A simplex given by its strictly increasing vertex indices."""

    vertices: Tuple[int, ...]

    def __post_init__(self):
        if len(self.vertices) == 0:
            raise InvalidSimplexError("A simplex needs at least one vertex")
        for vertex in self.vertices:
            if int(vertex) != vertex or vertex < 0:
                raise InvalidSimplexError(f"Vertex indices must be non-negative integers, got {self.vertices}")
        if any(a >= b for a, b in zip(self.vertices, self.vertices[1:])):
            raise InvalidSimplexError(f"Vertices must be strictly increasing, got {self.vertices}")

    @classmethod
    def of(cls, vertices: Iterable[int]) -> "Simplex":
        """Build a simplex from vertices in any order.

        Raises:
            InvalidSimplexError: If a vertex is repeated
        """
        items = [int(v) for v in vertices]
        if len(set(items)) != len(items):
            raise InvalidSimplexError(f"Duplicate vertices in simplex {items}")
        return cls(tuple(sorted(items)))

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def facets(self) -> List["Simplex"]:
        """Codimension-1 faces, empty for a vertex."""
        if self.dim == 0:
            return []
        return [Simplex(face) for face in combinations(self.vertices, len(self.vertices) - 1)]

    def faces(self) -> List["Simplex"]:
        """All nonempty faces including the simplex itself."""
        return [Simplex(face) for size in range(1, len(self.vertices) + 1) for face in combinations(self.vertices, size)]

    def __repr__(self) -> str:
        return f"Simplex({list(self.vertices)})"


SimplexLike = Union[Simplex, Iterable[int]]


def as_simplex(value: SimplexLike) -> Simplex:
    return value if isinstance(value, Simplex) else Simplex.of(value)


def canonical_order(simplices: Iterable[Simplex]) -> List[Simplex]:
    """Dimension first, then lexicographic vertices."""
    return sorted(simplices, key=lambda s: (s.dim, s.vertices))


@dataclass(frozen=True)
class SimplicialComplex:
    """A set of simplices closed under taking faces."""

    simplices: FrozenSet[Simplex]

    def __post_init__(self):
        for simplex in self.simplices:
            for facet in simplex.facets():
                if facet not in self.simplices:
                    raise InvalidSimplexError(f"{facet} is a face of {simplex} but is missing from the complex")

    def __len__(self) -> int:
        return len(self.simplices)

    def __contains__(self, item: SimplexLike) -> bool:
        return as_simplex(item) in self.simplices

    @property
    def dimension(self) -> int:
        return max((s.dim for s in self.simplices), default=-1)

    def of_dim(self, k: int) -> List[Simplex]:
        return sorted(s for s in self.simplices if s.dim == k)

    def counts(self) -> List[int]:
        """Number of simplices per dimension 0..dimension."""
        return [len(self.of_dim(k)) for k in range(self.dimension + 1)]

    def vertex_count(self) -> int:
        return len(self.of_dim(0))

    def ordered(self) -> List[Simplex]:
        return canonical_order(self.simplices)


def close_complex(generators: Iterable[SimplexLike]) -> SimplicialComplex:
    """Return the smallest simplicial complex containing every generator.

    Args:
        generators: Simplices or vertex iterables

    Returns:
        The closure under taking faces

    Raises:
        InvalidSimplexError: If a generator repeats a vertex
    """
    closed: Set[Simplex] = set()
    for generator in generators:
        simplex = as_simplex(generator)
        if simplex in closed:
            continue
        closed.update(simplex.faces())
    return SimplicialComplex(frozenset(closed))


@dataclass
class BoundaryMatrix:
    """Sparse F2 boundary matrix: column j lists the row indices of the facets of simplices[j]."""

    simplices: List[Simplex]
    columns: List[List[int]]
    index: Dict[Simplex, int] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.simplices)

    def column_dims(self) -> List[int]:
        return [s.dim for s in self.simplices]

    def restricted(self, k: int) -> List[List[int]]:
        """Columns of the k-simplices, i.e. the matrix of the k-th boundary operator."""
        return [column for simplex, column in zip(self.simplices, self.columns) if simplex.dim == k]

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.size, self.size), dtype=np.uint8)
        for j, column in enumerate(self.columns):
            dense[column, j] = 1
        return dense


def boundary_matrix(complex_: SimplicialComplex, order: Optional[Sequence[SimplexLike]] = None) -> BoundaryMatrix:
    """Build the F2 boundary matrix of a complex under a total order of its simplices.

    Args:
        complex_: The simplicial complex
        order: Total order of the simplices (defaults to dimension-then-lexicographic)

    Returns:
        Boundary matrix with rows and columns in the given order

    Raises:
        OrderingError: If the order is not a permutation of the complex or puts a coface before a face
    """
    ordered = canonical_order(complex_.simplices) if order is None else [as_simplex(s) for s in order]
    if len(ordered) != len(complex_.simplices) or set(ordered) != complex_.simplices:
        raise OrderingError("The order must list every simplex of the complex exactly once")

    index: Dict[Simplex, int] = {}
    columns: List[List[int]] = []
    for position, simplex in enumerate(ordered):
        rows = []
        for facet in simplex.facets():
            row = index.get(facet)
            if row is None:
                raise OrderingError(f"Face {facet} must precede {simplex} in the order")
            rows.append(row)
        columns.append(sorted(rows))
        index[simplex] = position
    return BoundaryMatrix(ordered, columns, index)


def reduce_columns(columns: Iterable[Iterable[int]]) -> List[Set[int]]:
    """Left-to-right column reduction over F2 with a pivot lookup table.

    Returns:
        Reduced columns (same order); nonzero ones have pairwise distinct lowest rows
    """
    pivots: Dict[int, Set[int]] = {}
    reduced: List[Set[int]] = []
    for column in columns:
        current = set(column)
        while current:
            low = max(current)
            other = pivots.get(low)
            if other is None:
                pivots[low] = current
                break
            current ^= other
        reduced.append(current)
    return reduced


def rank_f2(matrix: Union[BoundaryMatrix, Sequence[Iterable[int]]], k: Optional[int] = None) -> int:
    """Rank over F2 of a boundary matrix, or of its k-th boundary operator block.

    Args:
        matrix: Boundary matrix or a plain list of sparse columns
        k: Restrict to the columns of k-simplices

    Returns:
        The F2 rank
    """
    if isinstance(matrix, BoundaryMatrix):
        columns = matrix.restricted(k) if k is not None else matrix.columns
    else:
        columns = matrix
    return sum(1 for column in reduce_columns(columns) if column)


def betti_numbers(complex_: SimplicialComplex, max_dim: int) -> List[int]:
    """Betti numbers over F2 via rank-nullity.

    Args:
        complex_: The simplicial complex
        max_dim: Highest dimension to report

    Returns:
        [beta_0, ..., beta_max_dim] with beta_k = nullity(d_k) - rank(d_{k+1})
    """
    if max_dim < 0:
        raise ValueError("max_dim must be non-negative")
    matrix = boundary_matrix(complex_)
    ranks = [rank_f2(matrix, k) for k in range(max_dim + 2)]
    betti = []
    for k in range(max_dim + 1):
        count = sum(1 for s in matrix.simplices if s.dim == k)
        betti.append(count - ranks[k] - ranks[k + 1])
    return betti
