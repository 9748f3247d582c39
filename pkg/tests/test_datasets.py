"""Test suite for data generators and file formats."""

import json

import numpy as np
import pytest

from utils.datasets import (
    generate,
    generate_bifurcation_cloud,
    generate_gaussian_cloud,
    generate_noisy_circle,
    generate_synthetic_cycle,
    karate_graph,
    load_edge_list,
    load_experiment_config,
    load_input,
    load_loss_spec,
    load_point_csv,
    resolve_loss,
    save_points_csv,
)
from utils.embedders import GraphData
from utils.exceptions import ConfigurationError, EmptyCloudError, ParseError
from utils.models import EmbedderKind, FiltrationKind, GeneratorKind, GeneratorSpec


class TestGenerators:
    """Test synthetic data."""

    def test_synthetic_cycle(self):
        """Test the first two coordinates trace the circle plus bounded noise."""
        data = generate_synthetic_cycle(n=50, ambient_dim=500, seed=0)
        assert data.points.shape == (50, 500)
        radius = np.linalg.norm(data.points[:, :2], axis=1)
        assert np.all(radius <= 1 + 0.45 * np.sqrt(2) + 1e-12)
        assert np.all(np.abs(data.points[:, 2:]) <= 0.45)
        assert np.all((data.labels >= 0) & (data.labels < 2 * np.pi))

    def test_control_has_no_cycle(self):
        """Test the control draws noise only."""
        data = generate_synthetic_cycle(n=20, ambient_dim=5, seed=0, with_cycle=False)
        assert np.all(np.abs(data.points) <= 0.45)

    def test_seeded(self):
        """Test generators repeat under a seed."""
        assert np.array_equal(generate_gaussian_cloud(10, 3, seed=1), generate_gaussian_cloud(10, 3, seed=1))
        assert np.array_equal(generate_noisy_circle(seed=2).points, generate_noisy_circle(seed=2).points)

    def test_empty(self):
        """Test empty clouds are refused."""
        with pytest.raises(EmptyCloudError):
            generate_gaussian_cloud(0, 2)

    def test_bifurcation_branches(self):
        """Test three labeled branches of equal size."""
        data = generate_bifurcation_cloud(n_per_branch=10, seed=0)
        assert data.points.shape == (30, 2)
        assert list(np.bincount(data.labels)) == [10, 10, 10]

    def test_karate(self):
        """Test the karate club graph and its two clubs."""
        graph = karate_graph()
        assert graph.n_nodes == 34
        assert len(graph.edges) == 78
        assert set(graph.labels) == {0, 1}

    def test_generate_dispatch(self):
        """Test generator specs dispatch to the right generator."""
        points = generate(GeneratorSpec(kind=GeneratorKind.GAUSSIAN, params={"n": 5, "d": 3, "seed": 0}))
        assert points.shape == (5, 3)
        assert isinstance(generate(GeneratorSpec(kind="karate")), GraphData)

    def test_generate_bad_params(self):
        """Test unknown generator parameters are configuration errors."""
        with pytest.raises(ConfigurationError):
            generate(GeneratorSpec(kind="noisy-circle", params={"radius": 2}))


class TestPointCsv:
    """Test the point-cloud CSV format."""

    def test_header_detected(self, samples_dir):
        """Test a non-numeric first row is skipped as a header."""
        points = load_point_csv(samples_dir / "square.csv")
        assert points.tolist() == [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]

    def test_no_header_and_blank_lines(self, tmp_path):
        """Test headerless files with blank lines load."""
        path = tmp_path / "points.csv"
        path.write_text("1,2\n\n3,4\n")
        assert load_point_csv(path).tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_center(self, tmp_path):
        """Test optional centering."""
        path = tmp_path / "points.csv"
        path.write_text("0,0\n2,4\n")
        assert load_point_csv(path, center=True).tolist() == [[-1.0, -2.0], [1.0, 2.0]]

    def test_ragged_row(self, tmp_path):
        """Test a short row is reported with its line number."""
        path = tmp_path / "points.csv"
        path.write_text("x,y\n1,2\n3\n")
        with pytest.raises(ParseError) as info:
            load_point_csv(path)
        assert info.value.line == 3

    def test_non_numeric(self, tmp_path):
        """Test a non-numeric cell is reported with its line number."""
        path = tmp_path / "points.csv"
        path.write_text("1,2\n3,abc\n")
        with pytest.raises(ParseError) as info:
            load_point_csv(path)
        assert info.value.line == 2
        assert str(path) in str(info.value)

    def test_empty_file(self, tmp_path):
        """Test an empty file holds no points."""
        path = tmp_path / "points.csv"
        path.write_text("")
        with pytest.raises(EmptyCloudError):
            load_point_csv(path)

    def test_save_reloads_exactly(self, tmp_path, rng):
        """Test saved points reload bit for bit."""
        points = rng.normal(size=(200, 3)) * np.array([1.0, 1e-7, 1e9])
        save_points_csv(tmp_path / "out.csv", points)
        assert np.array_equal(load_point_csv(tmp_path / "out.csv"), points)

    def test_reload_matches_python_float(self, tmp_path):
        """Test cells parse to the correctly rounded double."""
        cells = ["0.1", "2.2250738585072014e-308", "1.7976931348623157e308", "-0.30000000000000004"]
        (tmp_path / "cells.csv").write_text(",".join(cells) + "\n")
        assert load_point_csv(tmp_path / "cells.csv")[0].tolist() == [float(cell) for cell in cells]


class TestEdgeList:
    """Test the edge-list format."""

    def test_comments_and_blank_lines(self, tmp_path):
        """Test comments and blank lines are ignored."""
        path = tmp_path / "graph.txt"
        path.write_text("# ring\n0 1\n\n1 2  # spoke\n2 0\n")
        graph = load_edge_list(path)
        assert graph.edges == [(0, 1), (0, 2), (1, 2)]

    def test_self_loop(self, tmp_path):
        """Test self-loops are reported with their line."""
        path = tmp_path / "graph.txt"
        path.write_text("0 1\n2 2\n")
        with pytest.raises(ParseError) as info:
            load_edge_list(path)
        assert info.value.line == 2

    def test_malformed(self, tmp_path):
        """Test lines without exactly two integers are rejected."""
        path = tmp_path / "graph.txt"
        path.write_text("0 1 2\n")
        with pytest.raises(ParseError):
            load_edge_list(path)

    def test_node_count(self, tmp_path):
        """Test an explicit node count keeps isolated trailing nodes."""
        path = tmp_path / "graph.txt"
        path.write_text("0 1\n")
        assert load_edge_list(path, n_nodes=4).n_nodes == 4


class TestConfigFiles:
    """Test loss and experiment JSON files."""

    def test_circle_sample(self, samples_dir):
        """Test the bundled circle prior."""
        spec = load_loss_spec(samples_dir / "circle_loss.json")
        assert spec.filtration.kind is FiltrationKind.WEAK_ALPHA
        assert spec.terms[0].hom_dim == 1 and spec.terms[0].mu == -1

    def test_bifurcation_sample(self, samples_dir):
        """Test the bundled bifurcation prior has an infinite window and a functional term."""
        spec = load_loss_spec(samples_dir / "bifurcation_loss.json")
        assert spec.terms[0].j is None
        assert spec.terms[1].functional.tau == 0.75

    def test_invalid_json(self, tmp_path):
        """Test malformed JSON is a parse error with a line number."""
        path = tmp_path / "loss.json"
        path.write_text('{\n  "terms": [\n}')
        with pytest.raises(ParseError) as info:
            load_loss_spec(path)
        assert info.value.line == 3

    def test_invalid_spec(self, tmp_path):
        """Test a structurally valid file with bad values is a configuration error."""
        path = tmp_path / "loss.json"
        path.write_text(json.dumps({"terms": [{"k": 1, "mu": 2}]}))
        with pytest.raises(ConfigurationError):
            load_loss_spec(path)

    def test_experiment_sample(self, samples_dir):
        """Test the bundled synthetic-cycle experiment."""
        config = load_experiment_config(samples_dir / "synth_cycle.json")
        assert config.embedder is EmbedderKind.PCA
        assert config.init == "pca"
        assert config.run.lambda_top == 0.005
        assert config.loss.terms[0].sampling.fraction == 0.4
        assert load_input(config).shape == (50, 500)

    def test_relative_paths(self, tmp_path):
        """Test input and loss paths resolve against the config's directory."""
        (tmp_path / "points.csv").write_text("0,0\n1,0\n1,1\n0,1\n")
        (tmp_path / "loss.json").write_text(json.dumps({"terms": [{"k": 1, "i": 1, "j": 1, "mu": -1}]}))
        (tmp_path / "experiment.json").write_text(
            json.dumps({"input": {"points": "points.csv"}, "loss_path": "loss.json", "center": False})
        )
        config = load_experiment_config(tmp_path / "experiment.json")
        assert load_input(config).tolist() == [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
        assert resolve_loss(config).terms[0].hom_dim == 1

    def test_graph_input(self, samples_dir):
        """Test the karate experiment loads a graph."""
        config = load_experiment_config(samples_dir / "karate_clusters.json")
        assert isinstance(load_input(config), GraphData)
