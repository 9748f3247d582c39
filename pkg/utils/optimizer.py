"""Training loop for topologically regularized embeddings.

Each epoch evaluates the embedding loss and the topological loss on the current
embedding, combines their gradients and takes one step of size
learning_rate * lr_decay**epoch: a Stiefel step for linear embedders, a plain
gradient step for free coordinates.

What the recorded total loss means depends on the mode:
    regularized       total = embedding + lambda_top * topological
    topological-only  total = topological
    embedding-only    total = embedding
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from utils.config import derive_seed, get_settings
from utils.embedders import EmbeddingObjective, EmbeddingState, GraphData, make_objective
from utils.exceptions import ConfigurationError, DivergenceError
from utils.models import EmbedderKind, FiltrationKind, NeighborConfig, RunConfig, RunMode, TopoLossSpec, WalkConfig
from utils.topo_loss import eval_spec, full_loss

logger = logging.getLogger(__name__)

EMBEDDING_STREAM = 0
TOPOLOGY_STREAM = 1
REPORT_STREAM = 2


@dataclass
class RunTrace:
    """Per-epoch losses of one run and the embedding it ended with."""

    config: RunConfig
    initial_state: EmbeddingState
    state: EmbeddingState
    embedding_loss: List[float] = field(default_factory=list)
    topological_loss: List[float] = field(default_factory=list)
    total_loss: List[float] = field(default_factory=list)
    wall_time: float = 0.0
    stopped_early: bool = False
    failure: Optional[str] = None

    @property
    def epochs(self) -> int:
        return len(self.total_loss)

    @property
    def succeeded(self) -> bool:
        return self.failure is None

    def raise_for_failure(self) -> None:
        if self.failure is not None:
            raise DivergenceError(self.failure, trace=self)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epoch": np.arange(self.epochs),
                "l_emb": self.embedding_loss,
                "l_top": self.topological_loss,
                "l_tot": self.total_loss,
            }
        )

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def summary(self) -> Dict[str, Any]:
        return {
            "epochs": self.epochs,
            "mode": self.config.mode.value,
            "lambda_top": self.config.lambda_top,
            "learning_rate": self.config.learning_rate,
            "lr_decay": self.config.lr_decay,
            "seed": self.config.seed,
            "stopped_early": self.stopped_early,
            "failure": self.failure,
            "wall_time": self.wall_time,
            "final": {
                "l_emb": self.embedding_loss[-1] if self.epochs else None,
                "l_top": self.topological_loss[-1] if self.epochs else None,
                "l_tot": self.total_loss[-1] if self.epochs else None,
            },
        }


def stagnation_stop(trace: RunTrace, config: RunConfig) -> bool:
    """True when the topological loss has stopped moving.

    Compares the mean of the last `stop_long` epochs with the mean of the last
    `stop_short`: |long / short - 1| < tolerance, or |long - short| < tolerance when the
    short mean is zero. Runs that record no topological loss never stop early.
    """
    values = trace.topological_loss
    if len(values) < config.stop_long or not np.all(np.isfinite(values[-config.stop_long :])):
        return False
    long_mean = float(np.mean(values[-config.stop_long :]))
    short_mean = float(np.mean(values[-config.stop_short :]))
    if short_mean == 0:
        return abs(long_mean - short_mean) < config.stop_tolerance
    return abs(long_mean / short_mean - 1) < config.stop_tolerance


def _check_spec(objective: EmbeddingObjective, spec: Optional[TopoLossSpec], config: RunConfig) -> None:
    if spec is None:
        if config.mode is not RunMode.EMBEDDING_ONLY:
            raise ConfigurationError(f"Mode '{config.mode.value}' needs a topological loss")
        return
    if spec.filtration.kind is FiltrationKind.WEAK_ALPHA and objective.dim != 2:
        raise ConfigurationError(f"The weak Alpha filtration needs a 2D embedding, got dimension {objective.dim}")


def run(
    objective: EmbeddingObjective,
    spec: Optional[TopoLossSpec],
    config: RunConfig,
    initial_state: Optional[EmbeddingState] = None,
) -> RunTrace:
    """Optimize an embedding objective, optionally regularized by a topological prior.

    Args:
        objective: Embedding loss and parameterization
        spec: Topological prior (may be None in embedding-only mode)
        config: Loop parameters
        initial_state: Starting embedding (defaults to the objective's seeded initialization)

    Returns:
        The run trace; on a non-finite loss or coordinate the trace ends at the failing
        epoch and `failure` says why
    """
    _check_spec(objective, spec, config)
    state = initial_state or objective.initial_state(derive_seed(config.seed, 0, EMBEDDING_STREAM, 0))
    trace = RunTrace(config=config, initial_state=state, state=state)
    mode = config.mode
    use_embedding = mode is not RunMode.TOPOLOGICAL_ONLY
    use_topology = spec is not None and mode is not RunMode.EMBEDDING_ONLY and (
        mode is RunMode.TOPOLOGICAL_ONLY or config.lambda_top > 0
    )
    track_topology = spec is not None and (mode is not RunMode.EMBEDDING_ONLY or config.track_topology)
    topology_weight = 1.0 if mode is RunMode.TOPOLOGICAL_ONLY else config.lambda_top

    velocity = None
    started = time.perf_counter()
    for epoch in range(config.max_epochs):
        l_emb, g_emb = objective.loss_grad(state, derive_seed(config.seed, epoch, EMBEDDING_STREAM))
        l_top, g_top = np.nan, None
        if track_topology or use_topology:
            l_top, g_top = eval_spec(state.coordinates, spec, derive_seed(config.seed, epoch, TOPOLOGY_STREAM))

        if mode is RunMode.REGULARIZED:
            total = l_emb + config.lambda_top * l_top if spec is not None else l_emb
        elif mode is RunMode.TOPOLOGICAL_ONLY:
            total = l_top
        else:
            total = l_emb

        direction = np.zeros_like(objective.parameters(state))
        if use_embedding:
            direction = direction + g_emb
        if use_topology:
            direction = direction + topology_weight * objective.coordinate_gradient_to_parameters(state, g_top)

        trace.embedding_loss.append(float(l_emb))
        trace.topological_loss.append(float(l_top))
        trace.total_loss.append(float(total))

        if not (np.isfinite(total) and np.all(np.isfinite(direction))):
            trace.failure = f"Non-finite loss or gradient at epoch {epoch}"
            logger.error(trace.failure)
            break

        if config.momentum > 0:
            velocity = direction if velocity is None else config.momentum * velocity + direction
            direction = velocity
        if config.grad_clip is not None:
            direction = np.clip(direction, -config.grad_clip, config.grad_clip)

        state = objective.step(state, direction, config.step_size(epoch))
        if not state.is_finite():
            trace.failure = f"Non-finite coordinates after epoch {epoch}"
            logger.error(trace.failure)
            break
        trace.state = state

        if epoch % config.log_every == 0:
            logger.info("epoch %d: l_emb=%.6g l_top=%.6g l_tot=%.6g", epoch, l_emb, l_top, total)
        if config.early_stopping and stagnation_stop(trace, config):
            trace.stopped_early = True
            logger.info("Topological loss stagnated; stopping after epoch %d", epoch)
            break

    trace.wall_time = time.perf_counter() - started
    return trace


def fit(
    data: Union[np.ndarray, GraphData],
    embedder: EmbedderKind,
    spec: Optional[TopoLossSpec],
    config: RunConfig,
    dim: int = 2,
    neighbors: Optional[NeighborConfig] = None,
    walks: Optional[WalkConfig] = None,
    initial_state: Optional[EmbeddingState] = None,
) -> RunTrace:
    """Embed a data matrix or graph with the chosen embedder and prior.

    Minimizes L_emb + lambda_top * L_top in regularized mode (see `run` for the other modes).
    """
    objective = make_objective(embedder, data, dim, neighbors, walks)
    return run(objective, spec, config, initial_state)


def sweep_lambda(
    objective: EmbeddingObjective,
    spec: TopoLossSpec,
    config: RunConfig,
    lambdas: Sequence[float],
    initial_state: Optional[EmbeddingState] = None,
) -> Dict[float, RunTrace]:
    """Run one regularized fit per lambda_top concurrently, all from the same start."""
    start = initial_state or objective.initial_state(derive_seed(config.seed, 0, EMBEDDING_STREAM, 0))
    configs = [config.model_copy(update={"lambda_top": float(value), "mode": RunMode.REGULARIZED}) for value in lambdas]
    workers = max(1, min(get_settings().threads, len(configs)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        traces = list(executor.map(lambda c: run(objective, spec, c, start), configs))
    return {float(value): trace for value, trace in zip(lambdas, traces)}


@dataclass
class ModeComparison:
    """Ordinary, topologically optimized and regularized runs of one problem."""

    runs: Dict[str, RunTrace]
    losses: pd.DataFrame

    def balances(self) -> bool:
        """Whether the regularized losses lie between the ordinary and optimized ones."""
        emb, top = self.losses["l_emb"], self.losses["l_top"]
        return bool(
            emb["ordinary"] <= emb["regularized"] <= emb["optimized"]
            and top["optimized"] <= top["regularized"] <= top["ordinary"]
        )


def final_losses(objective: EmbeddingObjective, spec: TopoLossSpec, state: EmbeddingState, seed: Optional[int]):
    """Embedding loss and full-cloud (unsampled) topological loss of a state."""
    l_emb, _ = objective.loss_grad(state, derive_seed(seed, 0, REPORT_STREAM))
    return float(l_emb), float(full_loss(state.coordinates, spec))


def compare_modes(
    objective: EmbeddingObjective,
    spec: TopoLossSpec,
    config: RunConfig,
    ordinary_epochs: Optional[int] = None,
    initial_state: Optional[EmbeddingState] = None,
) -> ModeComparison:
    """Ordinary (embedding only), optimized (topology only) and regularized embeddings.

    The optimized and regularized runs both start from the ordinary embedding. Reported
    losses use the embedding loss and the unsampled topological loss of each final state.
    """
    ordinary_config = config.model_copy(
        update={"mode": RunMode.EMBEDDING_ONLY, "max_epochs": ordinary_epochs or config.max_epochs, "track_topology": False}
    )
    ordinary = run(objective, None, ordinary_config, initial_state)
    optimized = run(objective, spec, config.model_copy(update={"mode": RunMode.TOPOLOGICAL_ONLY}), ordinary.state)
    regularized = run(objective, spec, config.model_copy(update={"mode": RunMode.REGULARIZED}), ordinary.state)
    runs = {"ordinary": ordinary, "optimized": optimized, "regularized": regularized}
    rows = {name: final_losses(objective, spec, trace.state, config.seed) for name, trace in runs.items()}
    losses = pd.DataFrame.from_dict(rows, orient="index", columns=["l_emb", "l_top"])
    return ModeComparison(runs, losses)
