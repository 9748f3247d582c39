"""Test suite for downstream scores and circular rank correlation."""

import numpy as np
import pytest

from utils.evaluation import circular_spearman, downstream_accuracy, downstream_r2
from utils.exceptions import UsageError


class TestCircularSpearman:
    """Test the origin-free circular rank correlation."""

    def test_rotation_invariant(self):
        """Test a rotated copy of an angle sequence correlates perfectly."""
        angles = np.linspace(0, 2 * np.pi, 20, endpoint=False)
        rotated = np.mod(angles + 1.3, 2 * np.pi)
        assert circular_spearman(angles, rotated) == pytest.approx(1.0)

    def test_reversed_direction(self):
        """Test reversing the direction gives -1."""
        angles = np.linspace(0, 2 * np.pi, 20, endpoint=False)
        assert circular_spearman(angles, np.mod(-angles, 2 * np.pi) + 1e-9) == pytest.approx(-1.0)

    def test_bounds(self, rng):
        """Test the result is a correlation."""
        value = circular_spearman(rng.uniform(size=30), rng.uniform(size=30))
        assert -1.0 <= value <= 1.0

    def test_validation(self):
        """Test mismatched and too-short inputs are rejected."""
        with pytest.raises(UsageError):
            circular_spearman([1.0, 2.0, 3.0], [1.0, 2.0])
        with pytest.raises(UsageError):
            circular_spearman([1.0, 2.0], [1.0, 2.0])


class TestDownstream:
    """Test downstream prediction from embeddings."""

    def test_r2_on_informative_embedding(self, rng):
        """Test targets that are a function of the embedding are predicted well."""
        E = rng.uniform(-1, 1, size=(80, 2))
        targets = 3 * np.column_stack([E[:, 0], E[:, 1] ** 2])
        score = downstream_r2(E, targets, n_splits=3, seed=0)
        assert score.mean > 0.8

    def test_accuracy_on_separated_labels(self, rng):
        """Test well separated classes are classified accurately."""
        labels = np.repeat([0, 1], 30)
        E = rng.normal(size=(60, 2)) * 0.2 + labels[:, None] * 3.0
        score = downstream_accuracy(E, labels, n_splits=3, seed=0)
        assert score.mean == pytest.approx(1.0)
        assert score.std == pytest.approx(0.0)

    def test_row_mismatch(self):
        """Test embeddings and targets must align."""
        with pytest.raises(UsageError):
            downstream_r2(np.zeros((5, 2)), np.zeros(4))
