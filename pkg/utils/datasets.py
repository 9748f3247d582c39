"""Synthetic data generators and the point-cloud, edge-list and configuration file formats."""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, NamedTuple, Optional, Union

import networkx as nx
import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from utils.embedders.base import GraphData
from utils.exceptions import ConfigurationError, EmptyCloudError, ParseError, UsageError
from utils.models import ExperimentConfig, GeneratorKind, GeneratorSpec, TopoLossSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class LabeledCloud(NamedTuple):
    points: np.ndarray
    labels: np.ndarray


def generate_synthetic_cycle(
    n: int = 50,
    ambient_dim: int = 500,
    noise_half_width: float = 0.45,
    seed: Optional[int] = None,
    with_cycle: bool = True,
    standardize: bool = False,
) -> LabeledCloud:
    """Points on the unit circle in the first two coordinates, buried in uniform noise.

    Args:
        n: Number of points
        ambient_dim: Total number of coordinates (>= 2)
        noise_half_width: Noise is uniform on [-h, h] in every coordinate
        seed: Random seed
        with_cycle: Leave out the circle to get the pure-noise control
        standardize: Z-score every column

    Returns:
        (n, ambient_dim) points and the ground-truth angles in [0, 2pi)
    """
    if ambient_dim < 2:
        raise UsageError("ambient_dim must be at least 2")
    if n < 1:
        raise EmptyCloudError("n must be positive")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * np.pi, size=n)
    points = rng.uniform(-noise_half_width, noise_half_width, size=(n, ambient_dim)) if noise_half_width > 0 else np.zeros(
        (n, ambient_dim)
    )
    if with_cycle:
        points[:, 0] += np.cos(angles)
        points[:, 1] += np.sin(angles)
    if standardize:
        spread = points.std(axis=0)
        points = (points - points.mean(axis=0)) / np.where(spread > 0, spread, 1.0)
    return LabeledCloud(points, angles)


def generate_gaussian_cloud(n: int, d: int = 2, seed: Optional[int] = None) -> np.ndarray:
    """n points from the standard isotropic Gaussian in d dimensions."""
    if n < 1:
        raise EmptyCloudError("Cannot generate an empty point cloud")
    if d < 1:
        raise UsageError("d must be positive")
    return np.random.default_rng(seed).standard_normal((n, d))


def generate_noisy_circle(n: int = 60, sigma: float = 0.05, seed: Optional[int] = None) -> LabeledCloud:
    """Unit-circle points with isotropic Gaussian noise, and their true angles."""
    if n < 1:
        raise EmptyCloudError("Cannot generate an empty point cloud")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * np.pi, size=n)
    points = np.column_stack([np.cos(angles), np.sin(angles)]) + rng.normal(scale=sigma, size=(n, 2))
    return LabeledCloud(points, angles)


def generate_bifurcation_cloud(n_per_branch: int = 40, noise: float = 0.05, seed: Optional[int] = None) -> LabeledCloud:
    """A Y shape: three unit-length branches leaving the origin 120 degrees apart.

    Returns:
        (3 * n_per_branch, 2) points and their branch labels 0, 1, 2
    """
    if n_per_branch < 1:
        raise EmptyCloudError("Each branch needs at least one point")
    rng = np.random.default_rng(seed)
    directions = np.array([[np.cos(a), np.sin(a)] for a in np.deg2rad([90.0, 210.0, 330.0])])
    positions = rng.uniform(0.05, 1.0, size=(3, n_per_branch))
    points = np.concatenate([positions[b][:, None] * directions[b] for b in range(3)])
    points += rng.normal(scale=noise, size=points.shape)
    labels = np.repeat(np.arange(3), n_per_branch)
    return LabeledCloud(points, labels)


def karate_graph() -> GraphData:
    """Zachary's karate club with the two clubs as labels 0 and 1."""
    graph = nx.karate_club_graph()
    clubs = [graph.nodes[node]["club"] for node in graph.nodes()]
    names = sorted(set(clubs))
    labels = np.array([names.index(club) for club in clubs])
    return GraphData.from_edges(graph.edges(), n_nodes=graph.number_of_nodes(), labels=labels)


def generate(spec: GeneratorSpec) -> Union[np.ndarray, GraphData]:
    """Run a built-in generator; point generators return only the points."""
    params: Dict[str, Any] = dict(spec.params)
    try:
        if spec.kind is GeneratorKind.SYNTHETIC_CYCLE:
            return generate_synthetic_cycle(**params).points
        if spec.kind is GeneratorKind.GAUSSIAN:
            return generate_gaussian_cloud(**params)
        if spec.kind is GeneratorKind.NOISY_CIRCLE:
            return generate_noisy_circle(**params).points
        if spec.kind is GeneratorKind.BIFURCATION:
            return generate_bifurcation_cloud(**params).points
    except TypeError as e:
        raise ConfigurationError(f"Bad parameters for generator '{spec.kind.value}': {e}") from e
    if params:
        raise ConfigurationError("The karate generator takes no parameters")
    return karate_graph()


def _is_number(text: str) -> bool:
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def load_point_csv(path: PathLike, center: bool = False) -> np.ndarray:
    """Read a comma-separated point cloud, one point per row.

    A first row without any numeric cell is taken as a header. Blank lines are ignored.

    Args:
        path: CSV file
        center: Subtract the column means

    Returns:
        (n, d) float array

    Raises:
        ParseError: On ragged rows or non-numeric cells, with the offending line number
        EmptyCloudError: If the file holds no points
    """
    path = str(path)
    try:
        frame = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise EmptyCloudError(f"{path} contains no points")
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError("rows have different numbers of values", line=int(match.group(1)) if match else None, path=path)

    # short rows and blank lines come back as NaN cells
    frame = frame.fillna("").apply(lambda column: column.str.strip())
    blank = (frame == "").all(axis=1)
    first = next((position for position in range(len(frame)) if not blank.iloc[position]), None)
    if first is None:
        raise EmptyCloudError(f"{path} contains no points")
    if not any(_is_number(cell) for cell in frame.iloc[first]):
        logger.debug("Treating line %d of %s as a header", first + 1, path)
        blank.iloc[first] = True

    data = frame[~blank]
    if data.empty:
        raise EmptyCloudError(f"{path} contains no points")
    values = data.apply(pd.to_numeric, errors="coerce")
    bad = values.isna() | (data == "")
    if bad.to_numpy().any():
        row = int(np.flatnonzero(bad.any(axis=1).to_numpy())[0])
        line = int(data.index[row]) + 1
        cells = [cell for cell in data.iloc[row] if cell != ""]
        if len(cells) != data.shape[1]:
            raise ParseError(f"expected {data.shape[1]} values, got {len(cells)}", line=line, path=path)
        raise ParseError(f"non-numeric value in {list(data.iloc[row])}", line=line, path=path)

    # to_numeric is not correctly rounded; astype goes through float() on each cell
    points = data.astype(float).to_numpy()
    if not np.all(np.isfinite(points)):
        row = int(np.flatnonzero(~np.all(np.isfinite(points), axis=1))[0])
        raise ParseError("coordinates must be finite", line=int(data.index[row]) + 1, path=path)
    if center:
        points = points - points.mean(axis=0)
    return points


def load_edge_list(path: PathLike, n_nodes: Optional[int] = None) -> GraphData:
    """Read whitespace-separated integer node pairs, one edge per line; '#' starts a comment.

    Raises:
        ParseError: On malformed lines, self-loops or node ids outside 0..n_nodes-1
    """
    path = str(path)
    edges = []
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ParseError(f"expected two node ids, got {len(fields)} fields", line=number, path=path)
            try:
                u, v = int(fields[0]), int(fields[1])
            except ValueError:
                raise ParseError(f"node ids must be integers, got {line!r}", line=number, path=path)
            if u < 0 or v < 0 or (n_nodes is not None and max(u, v) >= n_nodes):
                raise ParseError(f"node id out of range in {line!r}", line=number, path=path)
            if u == v:
                raise ParseError(f"self-loop on node {u}", line=number, path=path)
            edges.append((u, v))
    if not edges and n_nodes is None:
        raise ParseError("the edge list is empty", path=path)
    return GraphData.from_edges(edges, n_nodes=n_nodes)


def save_points_csv(path: PathLike, points: np.ndarray, columns: Optional[list] = None) -> None:
    """Write a matrix with 17 significant digits, so it reloads bit for bit."""
    frame = pd.DataFrame(np.asarray(points, dtype=float), columns=columns)
    frame.to_csv(path, index=False, header=columns is not None, float_format="%.17g")


def _load_model(path: PathLike, model: type) -> BaseModel:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, path=str(path))
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"{path}: {e}") from e


def load_loss_spec(path: PathLike) -> TopoLossSpec:
    """Parse a topological prior from its JSON description."""
    return _load_model(path, TopoLossSpec)


def load_experiment_config(path: PathLike) -> ExperimentConfig:
    """Parse an experiment configuration; relative paths inside it resolve against its directory."""
    config = _load_model(path, ExperimentConfig)
    base = Path(path).parent
    updates = {}
    source = config.input
    for name in ("points", "edges"):
        value = getattr(source, name)
        if value is not None and not Path(value).is_absolute():
            updates[name] = str(base / value)
    if updates:
        config = config.model_copy(update={"input": source.model_copy(update=updates)})
    if config.loss_path is not None and not Path(config.loss_path).is_absolute():
        config = config.model_copy(update={"loss_path": str(base / config.loss_path)})
    return config


def load_input(config: ExperimentConfig) -> Union[np.ndarray, GraphData]:
    """Points or graph named by an experiment's input source."""
    source = config.input
    if source.points is not None:
        return load_point_csv(source.points, center=config.center)
    if source.edges is not None:
        return load_edge_list(source.edges)
    data = generate(source.generator)
    if isinstance(data, np.ndarray) and config.center:
        data = data - data.mean(axis=0)
    return data


def resolve_loss(config: ExperimentConfig) -> Optional[TopoLossSpec]:
    if config.loss is not None:
        return config.loss
    if config.loss_path is not None:
        return load_loss_spec(config.loss_path)
    return None
