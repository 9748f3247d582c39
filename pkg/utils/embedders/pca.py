"""PCA as reconstruction-error minimization over the Stiefel manifold."""

from typing import Optional, Tuple

import numpy as np

from utils.embedders.base import EmbeddingObjective, EmbeddingState, LinearProjection
from utils.exceptions import RetractionError, UsageError
from utils.models import Provenance


def pca_loss_grad(X: np.ndarray, proj: LinearProjection) -> Tuple[float, np.ndarray]:
    """Mean squared reconstruction error of X through the projector WW^T, and its gradient on W.

    Args:
        X: (n, D) column-centered data
        proj: Projection with W of shape (D, d)

    Returns:
        (loss, gradient) with the gradient shaped like W

    Raises:
        UsageError: If X and W do not share the dimension D
    """
    X = np.asarray(X, dtype=float)
    W = proj.W
    if X.ndim != 2 or X.shape[1] != W.shape[0]:
        raise UsageError(f"Data of shape {X.shape} does not match a projection of shape {W.shape}")
    residual = X @ W @ W.T - X
    scale = 1.0 / residual.size
    loss = float(np.sum(residual**2) * scale)
    cross = X.T @ residual
    gradient = 2 * scale * (cross + cross.T) @ W
    return loss, gradient


def stiefel_step(proj: LinearProjection, euclidean_grad: np.ndarray, step_size: float) -> LinearProjection:
    """One fixed-step Riemannian gradient step followed by a QR retraction.

    The Euclidean gradient G is projected to the tangent space at W as
    G - W sym(W^T G); the retraction keeps the Q factor with a non-negative R diagonal.

    Raises:
        UsageError: If the step size is not positive or the gradient has the wrong shape
        RetractionError: If the stepped matrix is rank deficient
    """
    if step_size <= 0:
        raise UsageError("step_size must be positive")
    G = np.asarray(euclidean_grad, dtype=float)
    W = proj.W
    if G.shape != W.shape:
        raise UsageError(f"Gradient of shape {G.shape} does not match W of shape {W.shape}")
    if not np.any(G):
        return LinearProjection(W.copy())
    WtG = W.T @ G
    tangent = G - W @ ((WtG + WtG.T) / 2)
    q, r = np.linalg.qr(W - step_size * tangent)
    diagonal = np.diag(r)
    if np.any(np.abs(diagonal) < 1e-12):
        raise RetractionError("QR retraction met a rank-deficient update")
    return LinearProjection(q * np.sign(diagonal))


class PCAObjective(EmbeddingObjective):
    """Linear embedding E = XW of column-centered data, W on the Stiefel manifold."""

    provenance = Provenance.LINEAR

    def __init__(self, X: np.ndarray, dim: int = 2, init: str = "random"):
        super().__init__(dim)
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] < dim:
            raise UsageError(f"Cannot linearly embed data of shape {X.shape} in {dim} dimensions")
        self.X = X - X.mean(axis=0)
        self.init = init

    @property
    def n_points(self) -> int:
        return self.X.shape[0]

    def initial_state(self, seed: Optional[int] = None) -> EmbeddingState:
        if self.init == "pca":
            projection = LinearProjection.from_pca(self.X, self.dim)
        else:
            projection = LinearProjection.random(self.X.shape[1], self.dim, seed)
        return EmbeddingState.linear(self.X, projection)

    def loss_grad(self, state: EmbeddingState, seed: Optional[int] = None) -> Tuple[float, np.ndarray]:
        return pca_loss_grad(self.X, state.projection)

    def parameters(self, state: EmbeddingState) -> np.ndarray:
        return state.projection.W

    def coordinate_gradient_to_parameters(self, state: EmbeddingState, gradient: np.ndarray) -> np.ndarray:
        return self.X.T @ gradient

    def step(self, state: EmbeddingState, direction: np.ndarray, learning_rate: float) -> EmbeddingState:
        return EmbeddingState.linear(self.X, stiefel_step(state.projection, direction, learning_rate))
