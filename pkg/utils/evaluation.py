"""Downstream prediction scores and circular rank correlation for embeddings."""

from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import rankdata
from sklearn.model_selection import GridSearchCV, train_test_split
from sklearn.multioutput import MultiOutputRegressor
from sklearn.svm import SVC, SVR

from utils.config import derive_seed
from utils.exceptions import UsageError

C_GRID = [1e-2, 1e-1, 1.0, 1e1, 1e2]


class SplitScore(NamedTuple):
    mean: float
    std: float


def downstream_r2(
    E: np.ndarray, targets: np.ndarray, n_splits: int = 100, test_size: float = 0.2, seed: Optional[int] = 0
) -> SplitScore:
    """Test r^2 of a multi-output SVR predicting `targets` from the embedding.

    For every random train/test split, C is tuned by 5-fold CV on the training part.
    """
    E, targets = np.asarray(E, dtype=float), np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    if len(E) != len(targets):
        raise UsageError("Embedding and targets have different numbers of rows")
    scores = []
    for split in range(n_splits):
        X_train, X_test, y_train, y_test = train_test_split(
            E, targets, test_size=test_size, random_state=derive_seed(seed, split)
        )
        search = GridSearchCV(MultiOutputRegressor(SVR()), {"estimator__C": C_GRID}, cv=5)
        search.fit(X_train, y_train)
        scores.append(search.score(X_test, y_test))
    return SplitScore(float(np.mean(scores)), float(np.std(scores)))


def downstream_accuracy(
    E: np.ndarray, labels: np.ndarray, n_splits: int = 100, test_size: float = 0.1, seed: Optional[int] = 0
) -> SplitScore:
    """Test accuracy of an SVC predicting `labels` from the embedding, C tuned by 5-fold CV."""
    E, labels = np.asarray(E, dtype=float), np.asarray(labels)
    if len(E) != len(labels):
        raise UsageError("Embedding and labels have different numbers of rows")
    scores = []
    for split in range(n_splits):
        X_train, X_test, y_train, y_test = train_test_split(
            E, labels, test_size=test_size, random_state=derive_seed(seed, split), stratify=labels
        )
        search = GridSearchCV(SVC(), {"C": C_GRID}, cv=5)
        search.fit(X_train, y_train)
        scores.append(search.score(X_test, y_test))
    return SplitScore(float(np.mean(scores)), float(np.std(scores)))


def circular_spearman(a: np.ndarray, b: np.ndarray) -> float:
    """Spearman correlation of two circular variables, maximized in absolute value over both origins.

    Moving the origin of a circular variable cyclically shifts its ranks, so every
    origin pair is covered by correlating all rank rotations of `a` with all of `b`.

    Returns:
        The correlation with the largest magnitude, sign kept
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n = len(a)
    if n != len(b):
        raise UsageError("Both variables need the same number of values")
    if n < 3:
        raise UsageError("Need at least 3 values")
    shifts = np.arange(n)[:, None]
    rotations_a = np.mod(rankdata(a, method="ordinal")[None, :] - 1 - shifts, n)
    rotations_b = np.mod(rankdata(b, method="ordinal")[None, :] - 1 - shifts, n)
    centered_a = rotations_a - (n - 1) / 2
    centered_b = rotations_b - (n - 1) / 2
    variance = (n * n - 1) / 12 * n
    correlations = centered_a @ centered_b.T / variance
    best = np.unravel_index(np.argmax(np.abs(correlations)), correlations.shape)
    return float(correlations[best])
