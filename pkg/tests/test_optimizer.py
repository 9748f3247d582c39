"""Test suite for the training loop, stopping rule and mode comparison."""

import numpy as np
import pytest

from utils.config import derive_seed
from utils.datasets import generate_gaussian_cloud, generate_synthetic_cycle
from utils.embedders import EmbeddingState, FreeCoordinates, LinearProjection, PCAObjective, pca_loss_grad
from utils.evaluation import downstream_r2
from utils.exceptions import ConfigurationError, DivergenceError
from utils.models import LossTerm, RunConfig, RunMode, TopoLossSpec
from utils.optimizer import RunTrace, compare_modes, fit, run, stagnation_stop, sweep_lambda
from utils.topo_loss import eval_spec, full_loss
from utils.topology.persistence import diagrams_from_cloud


@pytest.fixture
def synthetic_pca():
    """PCA objective on a small synthetic cycle buried in noise, started at the PCA solution."""
    X = generate_synthetic_cycle(n=40, ambient_dim=20, noise_half_width=0.45, seed=0).points
    return PCAObjective(X, 2, init="pca")


@pytest.fixture(scope="module")
def cycle_comparison():
    """Ordinary, optimized and regularized PCA of 50 circle points buried in 500 noisy dimensions."""
    cycle = generate_synthetic_cycle(n=50, ambient_dim=500, noise_half_width=0.45, seed=0)
    objective = PCAObjective(cycle.points, 2, init="pca")
    config = RunConfig(lambda_top=0.005, learning_rate=0.01, max_epochs=1000, early_stopping=True, seed=0)
    return cycle, objective, compare_modes(objective, TopoLossSpec.circle(fraction=0.4, repeats=5), config)


class TestRun:
    """Test single optimization runs."""

    def test_trace_lengths(self, synthetic_pca):
        """Test one loss entry per executed epoch."""
        trace = run(synthetic_pca, TopoLossSpec.circle(), RunConfig(max_epochs=5))
        assert trace.epochs == 5
        assert len(trace.embedding_loss) == len(trace.topological_loss) == 5
        assert trace.succeeded

    def test_loss_accounting(self, synthetic_pca):
        """Test total = embedding + lambda * topological at every epoch."""
        trace = run(synthetic_pca, TopoLossSpec.circle(), RunConfig(max_epochs=10, lambda_top=3.0))
        expected = np.array(trace.embedding_loss) + 3.0 * np.array(trace.topological_loss)
        assert np.array(trace.total_loss) == pytest.approx(expected)

    def test_zero_lambda_matches_embedding_only(self, synthetic_pca):
        """Test lambda = 0 follows the embedding-only trajectory exactly."""
        spec = TopoLossSpec.circle()
        regularized = run(synthetic_pca, spec, RunConfig(max_epochs=20, lambda_top=0.0, learning_rate=0.1))
        plain = run(synthetic_pca, spec, RunConfig(max_epochs=20, mode=RunMode.EMBEDDING_ONLY, learning_rate=0.1))
        assert np.array_equal(regularized.state.coordinates, plain.state.coordinates)
        assert regularized.embedding_loss == plain.embedding_loss

    def test_seeded(self, synthetic_pca):
        """Test runs repeat exactly under the same seed."""
        spec = TopoLossSpec.circle(fraction=0.5, repeats=2)
        config = RunConfig(max_epochs=5, seed=3)
        assert run(synthetic_pca, spec, config).total_loss == run(synthetic_pca, spec, config).total_loss

    def test_linear_state_stays_orthonormal(self, synthetic_pca):
        """Test PCA runs keep W on the Stiefel manifold."""
        trace = run(synthetic_pca, TopoLossSpec.circle(), RunConfig(max_epochs=20, lambda_top=5.0, learning_rate=0.05))
        assert trace.state.projection.is_orthonormal(1e-8)
        assert trace.state.coordinates == pytest.approx(synthetic_pca.X @ trace.state.projection.W)

    def test_weak_alpha_needs_2d(self, rng):
        """Test the weak Alpha filtration refuses 3D embeddings."""
        objective = FreeCoordinates(rng.normal(size=(10, 3)))
        with pytest.raises(ConfigurationError):
            run(objective, TopoLossSpec.circle(), RunConfig(max_epochs=1))

    def test_spec_required(self, synthetic_pca):
        """Test regularized runs need a prior."""
        with pytest.raises(ConfigurationError):
            run(synthetic_pca, None, RunConfig(max_epochs=1))

    def test_divergence_recorded(self, rng):
        """Test a blow-up ends the run and is reported."""
        objective = FreeCoordinates(rng.normal(size=(20, 2)))
        spec = TopoLossSpec(terms=[LossTerm(k=0, i=2, j=None, mu=-1, p=3)])
        trace = run(objective, spec, RunConfig(max_epochs=200, learning_rate=1e6, mode=RunMode.TOPOLOGICAL_ONLY))
        assert not trace.succeeded
        with pytest.raises(DivergenceError):
            trace.raise_for_failure()

    def test_lr_decay_steps(self, rng):
        """Test the second step is scaled by lr_decay."""
        cloud = rng.normal(size=(12, 2))
        spec = TopoLossSpec.circle()
        config = RunConfig(max_epochs=2, learning_rate=0.1, lr_decay=0.5, mode=RunMode.TOPOLOGICAL_ONLY)
        first = cloud - 0.1 * eval_spec(cloud, spec).gradient
        second = first - 0.05 * eval_spec(first, spec).gradient
        assert run(FreeCoordinates(cloud), spec, config).state.coordinates == pytest.approx(second)

    def test_csv_export(self, synthetic_pca, tmp_path):
        """Test the trace CSV has one row per epoch."""
        trace = run(synthetic_pca, TopoLossSpec.circle(), RunConfig(max_epochs=4))
        trace.to_csv(tmp_path / "trace.csv")
        lines = (tmp_path / "trace.csv").read_text().strip().splitlines()
        assert lines[0] == "epoch,l_emb,l_top,l_tot"
        assert len(lines) == 5


class TestTopologicalOptimization:
    """Test topology-only optimization of point clouds."""

    def test_optimize_connectivity_collapses_clusters(self):
        """Test shrinking the largest finite D0 persistence with a decaying step collapses the cloud."""
        cloud = generate_gaussian_cloud(20, 2, seed=0)
        spec = TopoLossSpec(terms=[LossTerm(k=0, i=2, j=2, mu=1)])
        config = RunConfig(max_epochs=500, learning_rate=0.2, lr_decay=0.993, mode="topological-only")
        trace = run(FreeCoordinates(cloud), spec, config)
        before = diagrams_from_cloud(cloud).diagrams[0].persistences()[0]
        after = diagrams_from_cloud(trace.state.coordinates).diagrams[0].persistences()[0]
        assert after < 0.05 * before

    def test_optimize_circle_grows_loop(self):
        """Test the circle prior grows the most persistent loop."""
        cloud = generate_gaussian_cloud(20, 2, seed=0)
        trace = run(FreeCoordinates(cloud), TopoLossSpec.circle(), RunConfig(max_epochs=500, mode="topological-only"))
        assert -trace.topological_loss[-1] > 3 * -trace.topological_loss[0]

    def test_optimize_second_loop_gives_two_circles(self):
        """Test growing the second loop leaves two loops of similar persistence."""
        cloud = generate_gaussian_cloud(20, 2, seed=0)
        spec = TopoLossSpec(terms=[LossTerm(k=1, i=2, j=2, mu=-1)])
        trace = run(FreeCoordinates(cloud), spec, RunConfig(max_epochs=500, mode="topological-only"))
        first, second = diagrams_from_cloud(trace.state.coordinates).diagrams[1].persistences()[:2]
        assert second >= 0.75 * first

    def test_optimize_sampled_circle(self):
        """Test the sampled circle prior shrinks the full-cloud loss."""
        cloud = generate_gaussian_cloud(200, 2, seed=0)
        spec = TopoLossSpec.circle(fraction=0.2, repeats=1)
        config = RunConfig(max_epochs=500, learning_rate=0.01, mode="topological-only")
        trace = run(FreeCoordinates(cloud), spec, config)
        assert full_loss(trace.state.coordinates, spec) < full_loss(cloud, spec)


class TestStagnation:
    """Test the stagnation stopping rule."""

    def _trace(self, values):
        state = EmbeddingState.free(np.zeros((1, 2)))
        trace = RunTrace(config=RunConfig(), initial_state=state, state=state)
        trace.topological_loss = list(values)
        trace.total_loss = list(values)
        return trace

    def test_needs_long_window(self):
        """Test the rule never fires before stop_long epochs."""
        assert not stagnation_stop(self._trace([1.0] * 99), RunConfig())

    def test_flat_fires(self):
        """Test a flat loss stagnates."""
        assert stagnation_stop(self._trace([1.0] * 100), RunConfig())

    def test_decreasing_does_not_fire(self):
        """Test a steadily falling loss keeps going."""
        assert not stagnation_stop(self._trace(np.linspace(10, 1, 100)), RunConfig())

    def test_zero_short_mean(self):
        """Test the absolute rule applies when the short mean is 0."""
        assert stagnation_stop(self._trace([0.0] * 100), RunConfig())

    def test_missing_topological_loss_never_fires(self):
        """Test a flat total loss does not stop a run that records no topological loss."""
        trace = self._trace([np.nan] * 100)
        trace.total_loss = [1.0] * 100
        assert not stagnation_stop(trace, RunConfig())

    def test_embedding_only_runs_to_limit(self, synthetic_pca):
        """Test early stopping leaves embedding-only runs alone."""
        config = RunConfig(max_epochs=150, early_stopping=True, mode=RunMode.EMBEDDING_ONLY, track_topology=False)
        trace = run(synthetic_pca, None, config)
        assert trace.epochs == 150
        assert not trace.stopped_early

    def test_early_stopping_run(self):
        """Test a run whose loss cannot move stops once the long window is full."""
        triangle = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        config = RunConfig(max_epochs=1000, early_stopping=True, mode=RunMode.TOPOLOGICAL_ONLY)
        trace = run(FreeCoordinates(triangle), TopoLossSpec.circle(), config)
        assert trace.stopped_early
        assert trace.epochs == 100


class TestRegularization:
    """Test regularized embeddings against their ordinary and optimized counterparts."""

    def test_fit(self):
        """Test fit builds the objective and runs it."""
        X = generate_synthetic_cycle(n=30, ambient_dim=10, seed=1).points
        trace = fit(X, "pca", TopoLossSpec.circle(), RunConfig(max_epochs=3))
        assert trace.epochs == 3
        assert trace.state.coordinates.shape == (30, 2)

    def test_sweep_response(self, synthetic_pca):
        """Test larger lambda trades embedding loss for topological loss."""
        config = RunConfig(max_epochs=150, learning_rate=0.01)
        traces = sweep_lambda(synthetic_pca, TopoLossSpec.circle(), config, [0.0, 5.0])
        spec = TopoLossSpec.circle()
        low, high = traces[0.0], traces[5.0]
        assert full_loss(high.state.coordinates, spec) <= full_loss(low.state.coordinates, spec)
        assert high.embedding_loss[-1] >= low.embedding_loss[-1]

    def test_compare_modes_runs(self, synthetic_pca):
        """Test the comparison table lists the three runs."""
        config = RunConfig(max_epochs=20, learning_rate=0.01, lambda_top=0.005)
        comparison = compare_modes(synthetic_pca, TopoLossSpec.circle(), config, ordinary_epochs=5)
        assert list(comparison.losses.index) == ["ordinary", "optimized", "regularized"]
        assert set(comparison.runs) == {"ordinary", "optimized", "regularized"}
        assert comparison.runs["optimized"].initial_state is comparison.runs["ordinary"].state

    def test_ordinary_is_pca_solution(self, cycle_comparison):
        """Test the ordinary run keeps the exact PCA embedding loss."""
        _, objective, comparison = cycle_comparison
        optimum, _ = pca_loss_grad(objective.X, LinearProjection.from_pca(objective.X, 2))
        assert comparison.losses.loc["ordinary", "l_emb"] == pytest.approx(optimum, rel=1e-9)

    def test_regularized_balances_cycle(self, cycle_comparison):
        """Test the regularized losses sit between the ordinary and optimized ones on the noisy cycle."""
        _, _, comparison = cycle_comparison
        losses = comparison.losses
        assert comparison.balances()
        assert losses.loc["regularized", "l_top"] <= 0.6 * losses.loc["ordinary", "l_top"]
        assert losses.loc["regularized", "l_emb"] <= 1.05 * losses.loc["ordinary", "l_emb"]

    def test_regularized_keeps_downstream_fit(self, cycle_comparison):
        """Test the regularized embedding predicts the clean circle about as well as plain PCA."""
        cycle, _, comparison = cycle_comparison
        targets = np.column_stack([np.cos(cycle.labels), np.sin(cycle.labels)])
        ordinary = downstream_r2(comparison.runs["ordinary"].state.coordinates, targets, n_splits=20, seed=0)
        regularized = downstream_r2(comparison.runs["regularized"].state.coordinates, targets, n_splits=20, seed=0)
        assert regularized.mean >= ordinary.mean - 0.05


class TestSeeds:
    """Test seed derivation used by the loop."""

    def test_streams_differ(self):
        """Test different epochs and streams get different seeds."""
        seeds = {derive_seed(0, epoch, stream) for epoch in range(5) for stream in range(3)}
        assert len(seeds) == 15
