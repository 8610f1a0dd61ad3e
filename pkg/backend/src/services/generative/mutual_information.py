"""
Gaussian mutual information between two latent blocks, estimated from an exponential
moving average of their joint covariance.

For a joint covariance S with diagonal blocks S11 and S22,
MI = 0.5 * (log det S11 + log det S22 - log det S), which is non-negative for any
positive definite S. The EMA history is treated as a constant; gradients flow only
through the current batch's covariance contribution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from backend.src.common.constants import MI_RIDGE
from backend.src.common.known_exception import EstimatorError, ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclass
class MiEmaState:
    """Running joint mean and covariance of (z1, z2)."""

    mean: np.ndarray
    covariance: np.ndarray
    decay: float = 0.99
    count: int = 0

    @classmethod
    def empty(cls, joint_dim: int, decay: float = 0.99) -> MiEmaState:
        return cls(
            mean=np.zeros(joint_dim),
            covariance=np.zeros((joint_dim, joint_dim)),
            decay=decay,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "decay": self.decay,
            "count": self.count,
        }


def _cholesky_logdet(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    """log det and inverse of a symmetric positive definite matrix."""
    try:
        lower = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise EstimatorError("covariance is not positive definite") from e
    lower_inv = np.linalg.inv(lower)
    return float(2.0 * np.sum(np.log(np.diag(lower)))), lower_inv.T @ lower_inv


def gaussian_mi(
    covariance: np.ndarray, split: int, ridge: float = 0.0
) -> tuple[float, np.ndarray]:
    """
    Mutual information between the first ``split`` coordinates and the rest.

    Returns:
        (MI, d MI / d covariance)

    Raises:
        EstimatorError: If a block is not positive definite after adding ``ridge``.
    """
    dim = covariance.shape[0]
    regularized = 0.5 * (covariance + covariance.T) + ridge * np.eye(dim)
    logdet_joint, inv_joint = _cholesky_logdet(regularized)
    logdet_1, inv_1 = _cholesky_logdet(regularized[:split, :split])
    logdet_2, inv_2 = _cholesky_logdet(regularized[split:, split:])
    block_inv = np.zeros_like(regularized)
    block_inv[:split, :split] = inv_1
    block_inv[split:, split:] = inv_2
    mi = 0.5 * (logdet_1 + logdet_2 - logdet_joint)
    if mi <= 0.0:
        return 0.0, np.zeros_like(regularized)
    return mi, 0.5 * (block_inv - inv_joint)


@dataclass
class MiResult:
    """Estimate, gradients with respect to the batch samples and the next EMA state."""

    mi: float
    grad_z1: np.ndarray
    grad_z2: np.ndarray
    state: MiEmaState


def mi_estimate(
    z1: np.ndarray,
    z2: np.ndarray,
    state: Optional[MiEmaState] = None,
    ridge: float = MI_RIDGE,
) -> MiResult:
    """
    Blends the batch covariance of (z1, z2) into the EMA and estimates their MI.

    The first batch initializes the EMA. ``state`` is not modified.

    Raises:
        ShapeMismatchError: If the batches are not paired row by row.
        EstimatorError: If the batch has fewer than two rows or the blended covariance
            is not positive definite after the ridge.
    """
    if z1.shape[0] != z2.shape[0]:
        raise ShapeMismatchError("mutual information batches", z1.shape[0], z2.shape[0])
    n = z1.shape[0]
    if n < 2:
        raise EstimatorError(f"batch of {n} rows")
    joint = np.concatenate([z1, z2], axis=1)
    split = z1.shape[1]
    if state is None:
        state = MiEmaState.empty(joint.shape[1])

    batch_mean = joint.mean(axis=0)
    centered = joint - batch_mean
    batch_cov = centered.T @ centered / (n - 1)
    if state.count == 0:
        weight = 1.0
        covariance, mean = batch_cov, batch_mean
    else:
        weight = 1.0 - state.decay
        covariance = state.decay * state.covariance + weight * batch_cov
        mean = state.decay * state.mean + weight * batch_mean

    mi, grad_cov = gaussian_mi(covariance, split, ridge)
    # sum_i (z_i - m) = 0, so the batch mean carries no gradient
    grad_joint = (2.0 * weight / (n - 1)) * centered @ grad_cov
    return MiResult(
        mi=mi,
        grad_z1=grad_joint[:, :split],
        grad_z2=grad_joint[:, split:],
        state=MiEmaState(
            mean=mean, covariance=covariance, decay=state.decay, count=state.count + 1
        ),
    )
