"""Topological loss functions on persistence diagrams and their gradients.

A term selects a window of ranks i..j of the persistence-sorted diagram D_k and sums
g(b, d) = (d - b)^p ((d + b) / 2)^q over it, times a sign mu. Filtration values are
distances between witness points, so the gradient of a term with respect to the point
coordinates is supported on the witness pairs of the selected diagram points.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from utils.config import derive_seed, get_settings
from utils.exceptions import ConfigurationError
from utils.models import FiltrationSpec, FunctionalConfig, LossTerm, SamplingConfig, TopoLossSpec
from utils.topology.filtration import as_point_cloud
from utils.topology.persistence import DiagramPoint, PersistenceDiagram, diagrams_from_cloud

logger = logging.getLogger(__name__)


class LossEvaluation(NamedTuple):
    value: float
    gradient: np.ndarray


def g_value(birth: float, death: float, p: float, q: float) -> float:
    """(d - b)^p ((d + b) / 2)^q"""
    value = (death - birth) ** p
    if q != 0:
        value *= ((death + birth) / 2) ** q
    return value


def g_partials(birth: float, death: float, p: float, q: float) -> Tuple[float, float]:
    """Partial derivatives (dg/db, dg/dd) of g."""
    persistence = death - birth
    midlife = (death + birth) / 2
    d_persistence = p * persistence ** (p - 1) * (midlife**q if q != 0 else 1.0)
    d_midlife = 0.0 if q == 0 else 0.5 * q * persistence**p * midlife ** (q - 1)
    return d_midlife - d_persistence, d_persistence + d_midlife


def selected_points(diagrams: Sequence[PersistenceDiagram], term: LossTerm) -> List[DiagramPoint]:
    """Finite diagram points in the term's rank window.

    Ranks are 1-based over the persistence-sorted diagram with essential points first,
    so on D0 the essential component is rank 1 and contributes nothing.
    """
    if term.is_empty_window:
        logger.debug("Rank window [%d, %d] is empty", term.i, term.j)
        return []
    if term.hom_dim >= len(diagrams):
        return []
    ranked = diagrams[term.hom_dim].ranked(with_essential=True)
    points = [ranked[r - 1] for r in term.ranks(len(ranked))]
    return [point for point in points if not point.is_essential]


def eval_term(diagrams: Sequence[PersistenceDiagram], term: LossTerm) -> float:
    """mu times the sum of g over the term's rank window (unweighted)."""
    return term.mu * sum(g_value(pt.birth, pt.death, term.p, term.q) for pt in selected_points(diagrams, term))


def _route(gradient: np.ndarray, cloud: np.ndarray, witness, scale: float) -> None:
    if witness is None or scale == 0:
        return
    a, c = witness
    direction = cloud[a] - cloud[c]
    direction = direction / np.linalg.norm(direction)
    gradient[a] += scale * direction
    gradient[c] -= scale * direction


def gradient_term(cloud, diagrams: Sequence[PersistenceDiagram], term: LossTerm) -> np.ndarray:
    """Gradient of eval_term with respect to the cloud coordinates.

    Args:
        cloud: (n, d) points the diagrams were computed from
        diagrams: Diagrams carrying witness back-references
        term: The loss term

    Returns:
        (n, d) array, zero outside the witness pairs of the selected points
    """
    cloud = np.asarray(cloud, dtype=float)
    gradient = np.zeros_like(cloud)
    for point in selected_points(diagrams, term):
        d_birth, d_death = g_partials(point.birth, point.death, term.p, term.q)
        _route(gradient, cloud, point.birth_witness, term.mu * d_birth)
        _route(gradient, cloud, point.death_witness, term.mu * d_death)
    return gradient


def minimum_sample_size(terms: Sequence[LossTerm]) -> int:
    """Smallest cloud on which every term can see a finite point of its dimension."""
    return max(2, max(term.hom_dim for term in terms) + 2)


def draw_subsets(n: int, sampling: SamplingConfig, minimum: int, seed: Optional[int]) -> List[np.ndarray]:
    """Uniform subsets of size ceil(f * n), drawn without replacement.

    Raises:
        ConfigurationError: If the subset size is below `minimum`
    """
    size = min(n, math.ceil(sampling.fraction * n))
    if size < minimum:
        raise ConfigurationError(
            f"Sampling fraction {sampling.fraction} of {n} points gives subsets of {size}; at least {minimum} are needed"
        )
    rng = np.random.default_rng(seed)
    return [np.sort(rng.choice(n, size=size, replace=False)) for _ in range(sampling.repeats)]


def centrality(cloud) -> np.ndarray:
    """Scaled centrality 1 - g / max g, where g is the distance to the cloud mean."""
    cloud = np.asarray(cloud, dtype=float)
    distances = np.linalg.norm(cloud - cloud.mean(axis=0), axis=1)
    largest = distances.max()
    if largest == 0:
        raise ConfigurationError("Centrality is undefined when every point sits at the mean")
    return 1.0 - distances / largest


def functional_selection(cloud, functional: FunctionalConfig, minimum: int) -> np.ndarray:
    """Indices of the centrality sublevel set {x : centrality(x) <= tau}.

    Raises:
        ConfigurationError: If fewer than `minimum` points are selected
    """
    cloud = np.asarray(cloud, dtype=float)
    if len(cloud) < 2:
        raise ConfigurationError("A functional restriction needs at least 2 points")
    selected = np.flatnonzero(centrality(cloud) <= functional.tau)
    if len(selected) < minimum:
        raise ConfigurationError(
            f"tau={functional.tau} selects {len(selected)} points; at least {minimum} are needed"
        )
    return selected


def _evaluate_subset(
    cloud: np.ndarray, indices: np.ndarray, terms: Sequence[LossTerm], spec: FiltrationSpec
) -> List[LossEvaluation]:
    sub_cloud = cloud[indices]
    result = diagrams_from_cloud(sub_cloud, spec)
    evaluations = []
    for term in terms:
        gradient = np.zeros_like(cloud)
        gradient[indices] = gradient_term(sub_cloud, result.diagrams, term)
        evaluations.append(LossEvaluation(eval_term(result.diagrams, term), gradient))
    return evaluations


def _evaluate_group(
    cloud: np.ndarray,
    terms: Sequence[LossTerm],
    spec: FiltrationSpec,
    sampling: Optional[SamplingConfig],
    functional: Optional[FunctionalConfig],
    seed: Optional[int],
    subsets: Optional[Sequence[np.ndarray]] = None,
) -> List[LossEvaluation]:
    """Evaluate terms sharing one restriction; diagrams are computed once per subset."""
    minimum = minimum_sample_size(terms)
    base = np.arange(len(cloud))
    if functional is not None:
        base = functional_selection(cloud, functional, minimum)
    if subsets is None:
        if sampling is None:
            subsets = [base]
        else:
            subsets = [base[s] for s in draw_subsets(len(base), sampling, minimum, seed)]

    if len(subsets) == 1:
        per_subset = [_evaluate_subset(cloud, subsets[0], terms, spec)]
    else:
        workers = min(get_settings().threads, len(subsets))
        with ThreadPoolExecutor(max_workers=workers) as executor:
            per_subset = list(executor.map(lambda s: _evaluate_subset(cloud, s, terms, spec), subsets))

    # summed in subset order so the mean does not depend on scheduling
    evaluations = []
    for position in range(len(terms)):
        value = 0.0
        gradient = np.zeros_like(cloud)
        for results in per_subset:
            value += results[position].value
            gradient += results[position].gradient
        evaluations.append(LossEvaluation(value / len(per_subset), gradient / len(per_subset)))
    return evaluations


def eval_sampled(
    cloud,
    term: LossTerm,
    seed: Optional[int],
    filtration: Optional[FiltrationSpec] = None,
    subsets: Optional[Sequence[np.ndarray]] = None,
) -> LossEvaluation:
    """Mean loss and gradient of a term over random subsets of the cloud.

    Args:
        cloud: (n, d) points
        term: A term with a sampling configuration
        seed: Seed for the subset draw
        filtration: Filtration to use (weak Alpha by default)
        subsets: Fixed index subsets to use instead of drawing them

    Returns:
        Mean loss and mean gradient, the latter scattered back to the sampled rows

    Raises:
        ConfigurationError: If the subsets would be too small
    """
    if term.sampling is None and subsets is None:
        raise ConfigurationError("eval_sampled needs a term with a sampling configuration")
    points = as_point_cloud(cloud)
    spec = filtration or FiltrationSpec()
    return _evaluate_group(points, [term], spec, term.sampling, None, seed, subsets)[0]


def eval_functional(
    cloud, term: LossTerm, filtration: Optional[FiltrationSpec] = None, seed: Optional[int] = None
) -> LossEvaluation:
    """Loss and gradient of a term on the centrality sublevel set of the cloud.

    The selection is treated as locally constant, so no gradient flows through the
    indicator or the cloud mean. A sampling configuration on the term samples inside
    the selection.

    Raises:
        ConfigurationError: If the sublevel set is too small for the term
    """
    if term.functional is None:
        raise ConfigurationError("eval_functional needs a term with a functional configuration")
    points = as_point_cloud(cloud)
    spec = filtration or FiltrationSpec()
    return _evaluate_group(points, [term], spec, term.sampling, term.functional, seed)[0]


def eval_spec(cloud, spec: TopoLossSpec, seed: Optional[int] = None) -> LossEvaluation:
    """Weighted sum of every term of a topological prior, with its gradient.

    Terms with the same sampling and functional restriction share one diagram
    computation (or one per sampled subset); each such group draws its subsets from its
    own seed derived from `seed`.
    """
    points = as_point_cloud(cloud)
    groups: Dict[Tuple, List[int]] = {}
    for position, term in enumerate(spec.terms):
        groups.setdefault((term.sampling, term.functional), []).append(position)

    total = 0.0
    gradient = np.zeros_like(points)
    for group_position, ((sampling, functional), positions) in enumerate(groups.items()):
        terms = [spec.terms[p] for p in positions]
        group_seed = derive_seed(seed, group_position)
        for term, evaluation in zip(terms, _evaluate_group(points, terms, spec.filtration, sampling, functional, group_seed)):
            total += term.weight * evaluation.value
            gradient += term.weight * evaluation.gradient
    return LossEvaluation(total, gradient)


def full_loss(cloud, spec: TopoLossSpec) -> float:
    """Deterministic value of a prior with every sampling configuration replaced by the full cloud."""
    points = as_point_cloud(cloud)
    stripped = TopoLossSpec(
        filtration=spec.filtration,
        terms=[term.model_copy(update={"sampling": None}) for term in spec.terms],
    )
    return eval_spec(points, stripped, seed=0).value
