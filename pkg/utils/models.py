"""Declarative models: topological loss specifications, run and experiment configuration."""

import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class FiltrationKind(str, Enum):
    """Enum for supported filtrations."""

    WEAK_ALPHA = "weak-alpha"
    RIPS = "rips"


class EmbedderKind(str, Enum):
    """Enum for embedding methods."""

    PCA = "pca"
    UMAP = "umap"
    INNER_PRODUCT = "inner-product"
    DEEPWALK = "deepwalk"

    @property
    def needs_graph(self) -> bool:
        return self in (EmbedderKind.INNER_PRODUCT, EmbedderKind.DEEPWALK)


class RunMode(str, Enum):
    """Enum for what the optimizer minimizes."""

    REGULARIZED = "regularized"
    TOPOLOGICAL_ONLY = "topological-only"
    EMBEDDING_ONLY = "embedding-only"


class Provenance(str, Enum):
    """How embedding coordinates are produced."""

    LINEAR = "linear"
    FREE = "free"


class GeneratorKind(str, Enum):
    """Enum for built-in data generators."""

    SYNTHETIC_CYCLE = "synthetic-cycle"
    GAUSSIAN = "gaussian"
    NOISY_CIRCLE = "noisy-circle"
    BIFURCATION = "bifurcation"
    KARATE = "karate"

    @property
    def is_graph(self) -> bool:
        return self is GeneratorKind.KARATE


class SamplingConfig(BaseModel):
    """Subsampling of the cloud before evaluating a term."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    fraction: float = Field(alias="f", gt=0, le=1, description="Sampling fraction f_S")
    repeats: int = Field(1, alias="n", ge=1, description="Number of random subsets n_S")


class FunctionalConfig(BaseModel):
    """Restriction of the cloud to a centrality sublevel set."""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(ge=0, description="Threshold on the scaled centrality (1 keeps every point)")


class LossTerm(BaseModel):
    """One persistence-sum term: mu * sum over ranks i..j of (d-b)^p ((d+b)/2)^q."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    hom_dim: int = Field(alias="k", ge=0, description="Homology dimension")
    i: int = Field(1, ge=1, description="First persistence rank (1-based)")
    j: Optional[int] = Field(None, description="Last persistence rank; None means infinity")
    mu: int = Field(1, description="Sign: 1 shrinks the selected holes, -1 grows them")
    p: float = Field(1.0, gt=0, description="Persistence exponent")
    q: float = Field(0.0, ge=0, description="Midlife exponent")
    weight: float = Field(1.0, description="Weight in the linear combination")
    sampling: Optional[SamplingConfig] = Field(None, description="Evaluate as an expectation over random subsets")
    functional: Optional[FunctionalConfig] = Field(None, description="Evaluate on a centrality sublevel set")

    @field_validator("j", mode="before")
    @classmethod
    def _parse_infinite_rank(cls, value: Any) -> Any:
        if value is None:
            return None
        if isinstance(value, str) and value.strip().lower() in {"inf", "infinity", "∞"}:
            return None
        if isinstance(value, float) and math.isinf(value):
            return None
        return value

    @field_validator("mu")
    @classmethod
    def _check_sign(cls, value: int) -> int:
        if value not in (-1, 1):
            raise ValueError("mu must be -1 or 1")
        return value

    @field_validator("weight")
    @classmethod
    def _check_weight(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("weight must be finite")
        return value

    @property
    def is_empty_window(self) -> bool:
        return self.j is not None and self.j < self.i

    def ranks(self, size: int) -> range:
        """1-based ranks selected from a ranked list of the given size."""
        last = size if self.j is None else min(self.j, size)
        return range(self.i, last + 1)

    def to_json_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "k": self.hom_dim,
            "i": self.i,
            "j": "inf" if self.j is None else self.j,
            "mu": self.mu,
            "p": self.p,
            "q": self.q,
            "weight": self.weight,
        }
        if self.sampling is not None:
            data["sampling"] = {"f": self.sampling.fraction, "n": self.sampling.repeats}
        if self.functional is not None:
            data["functional"] = {"tau": self.functional.tau}
        return data


class FiltrationSpec(BaseModel):
    """Which filtration a loss is evaluated on."""

    model_config = ConfigDict(frozen=True)

    kind: FiltrationKind = Field(FiltrationKind.WEAK_ALPHA, description="Filtration type")
    max_dim: int = Field(1, ge=1, description="Highest homology dimension (Rips includes simplices up to max_dim + 1)")

    @model_validator(mode="before")
    @classmethod
    def _parse_short_forms(cls, value: Any) -> Any:
        if isinstance(value, str):
            return {"kind": value}
        if isinstance(value, dict) and "rips" in value:
            options = value["rips"] or {}
            return {"kind": FiltrationKind.RIPS, **options}
        return value

    def to_json_value(self) -> Any:
        if self.kind is FiltrationKind.WEAK_ALPHA:
            return FiltrationKind.WEAK_ALPHA.value
        return {"rips": {"max_dim": self.max_dim}}


class TopoLossSpec(BaseModel):
    """A topological prior: a weighted list of loss terms on one filtration type."""

    model_config = ConfigDict(populate_by_name=True)

    filtration: FiltrationSpec = Field(default_factory=FiltrationSpec, description="Filtration used by every term")
    terms: List[LossTerm] = Field(min_length=1, description="Loss terms")

    @model_validator(mode="after")
    def _check_dimensions(self) -> "TopoLossSpec":
        limit = 1 if self.filtration.kind is FiltrationKind.WEAK_ALPHA else self.filtration.max_dim
        for term in self.terms:
            if term.hom_dim > limit:
                raise ValueError(
                    f"Term on D{term.hom_dim} needs homology up to dimension {term.hom_dim}, "
                    f"but the {self.filtration.kind.value} filtration provides up to {limit}"
                )
        return self

    @property
    def max_hom_dim(self) -> int:
        return max(term.hom_dim for term in self.terms)

    def to_json_dict(self) -> Dict[str, Any]:
        return {"filtration": self.filtration.to_json_value(), "terms": [t.to_json_dict() for t in self.terms]}

    @classmethod
    def circle(cls, fraction: Optional[float] = None, repeats: int = 1, weight: float = 1.0) -> "TopoLossSpec":
        """The prior -(d_1 - b_1) on D1, optionally sampled."""
        sampling = SamplingConfig(fraction=fraction, repeats=repeats) if fraction is not None else None
        return cls(terms=[LossTerm(hom_dim=1, i=1, j=1, mu=-1, weight=weight, sampling=sampling)])

    @classmethod
    def clusters(cls, count: int, fraction: Optional[float] = None, repeats: int = 1) -> "TopoLossSpec":
        """The prior -(d_count - b_count) on D0, favouring `count` separated clusters."""
        sampling = SamplingConfig(fraction=fraction, repeats=repeats) if fraction is not None else None
        return cls(terms=[LossTerm(hom_dim=0, i=count, j=count, mu=-1, sampling=sampling)])

    @classmethod
    def bifurcation(cls, tau: float = 0.75, p_connected: float = 1.0, p_flare: float = 1.0) -> "TopoLossSpec":
        """Sum of finite D0 persistences minus the third D0 persistence on the centrality sublevel set."""
        return cls(
            terms=[
                LossTerm(hom_dim=0, i=2, j=None, mu=1, p=p_connected),
                LossTerm(hom_dim=0, i=3, j=3, mu=1, p=p_flare, weight=-1.0, functional=FunctionalConfig(tau=tau)),
            ]
        )


class RunConfig(BaseModel):
    """Optimization loop parameters."""

    lambda_top: float = Field(1.0, ge=0, description="Weight of the topological loss")
    learning_rate: float = Field(0.01, gt=0, description="Step size of the first epoch")
    lr_decay: float = Field(1.0, gt=0, le=1, description="Per-epoch factor on the step size (1 keeps it fixed)")
    max_epochs: int = Field(500, ge=1, description="Epoch limit")
    early_stopping: bool = Field(False, description="Stop when the topological loss stagnates")
    stop_long: int = Field(100, ge=2, description="Long averaging window (epochs)")
    stop_short: int = Field(50, ge=1, description="Short averaging window (epochs)")
    stop_tolerance: float = Field(1e-3, gt=0, description="Stagnation tolerance on the window-average ratio")
    seed: Optional[int] = Field(0, description="Top-level seed")
    mode: RunMode = Field(RunMode.REGULARIZED, description="What the optimizer minimizes")
    momentum: float = Field(0.0, ge=0, lt=1, description="Heavy-ball momentum (0 disables it)")
    grad_clip: Optional[float] = Field(None, gt=0, description="Clip each gradient entry to [-c, c]")
    track_topology: bool = Field(True, description="Record the topological loss in embedding-only runs")
    log_every: int = Field(50, ge=1, description="Progress log interval")

    @model_validator(mode="after")
    def _check_windows(self) -> "RunConfig":
        if self.stop_short >= self.stop_long:
            raise ValueError("stop_short must be smaller than stop_long")
        if self.early_stopping and self.stop_long > self.max_epochs:
            raise ValueError("stop windows must not exceed max_epochs")
        return self

    def step_size(self, epoch: int) -> float:
        """Learning rate of a 0-based epoch."""
        return self.learning_rate * self.lr_decay**epoch


class WalkConfig(BaseModel):
    """Random-walk skip-gram parameters."""

    walks_per_node: int = Field(10, ge=1)
    walk_length: int = Field(10, ge=1)
    window: int = Field(2, ge=1)
    negatives: int = Field(5, ge=0)


class NeighborConfig(BaseModel):
    """Neighbor-embedding parameters."""

    n_neighbors: int = Field(15, ge=1)
    negatives: int = Field(5, ge=0)


class GeneratorSpec(BaseModel):
    """A built-in data generator and its keyword arguments."""

    kind: GeneratorKind
    params: Dict[str, Any] = Field(default_factory=dict)


class InputSource(BaseModel):
    """Exactly one of a point CSV, an edge list or a generator."""

    points: Optional[str] = Field(None, description="Point cloud CSV path")
    edges: Optional[str] = Field(None, description="Edge list path")
    generator: Optional[GeneratorSpec] = Field(None, description="Built-in generator")

    @model_validator(mode="after")
    def _check_single_source(self) -> "InputSource":
        given = [name for name in ("points", "edges", "generator") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError(f"exactly one input source is required, got {given or 'none'}")
        return self

    @property
    def is_graph(self) -> bool:
        if self.edges is not None:
            return True
        return self.generator is not None and self.generator.kind.is_graph


class ExperimentConfig(BaseModel):
    """Everything one `topoflux embed` invocation needs."""

    input: InputSource
    embedder: EmbedderKind = EmbedderKind.PCA
    loss: Optional[TopoLossSpec] = Field(None, description="Inline loss specification")
    loss_path: Optional[str] = Field(None, description="Path to a loss specification JSON file")
    run: RunConfig = Field(default_factory=RunConfig)
    dimension: int = Field(2, ge=1, description="Embedding dimension")
    init: Literal["pca", "random"] = Field("pca", description="PCA start: the exact PCA solution or a random orthonormal W")
    center: bool = Field(True, description="Column-center point clouds on load")
    neighbors: NeighborConfig = Field(default_factory=NeighborConfig)
    walks: WalkConfig = Field(default_factory=WalkConfig)
    output_dir: str = Field("results", description="Directory for emitted files")

    @model_validator(mode="after")
    def _check_compatibility(self) -> "ExperimentConfig":
        if self.embedder.needs_graph != self.input.is_graph:
            kind = "graph" if self.input.is_graph else "point cloud"
            raise ValueError(f"embedder '{self.embedder.value}' cannot embed a {kind} input")
        if self.loss is not None and self.loss_path is not None:
            raise ValueError("give either 'loss' or 'loss_path', not both")
        if self.run.mode is not RunMode.EMBEDDING_ONLY and self.loss is None and self.loss_path is None:
            raise ValueError(f"mode '{self.run.mode.value}' needs a topological loss")
        return self
