"""
Diagonal Gaussian utilities: heads, reparameterized sampling, densities and KL divergence.

Variances are carried as log-variances wherever gradients flow.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from backend.src.common.enums import OutputHead
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import (
    ComputationError,
    NonFiniteError,
    ShapeMismatchError,
)
from backend.src.services.nn.network import (
    GradientRecord,
    NetworkParams,
    NetworkSpec,
    backward,
    mlp_forward,
)

logger = logging.getLogger(__name__)

LOG_TWO_PI = float(np.log(2.0 * np.pi))


def split_heads(
    output: np.ndarray, spec: NetworkSpec
) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Splits a Gaussian network output into (mu, logvar) pairs, one per head.

    Head h occupies columns [2hL, 2hL + L) for mu and [2hL + L, 2(h+1)L) for logvar.
    """
    if spec.output_head is not OutputHead.GAUSSIAN:
        raise ComputationError(
            ErrorCode.COMPUTATION_INVALID_INPUT, "gaussian head", "network head is plain"
        )
    latent = spec.output_dim
    heads = []
    for h in range(spec.gaussian_heads):
        start = 2 * h * latent
        heads.append(
            (output[..., start : start + latent], output[..., start + latent : start + 2 * latent])
        )
    return heads


def merge_head_gradients(grads: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Inverse layout of ``split_heads`` for (d mu, d logvar) gradient pairs."""
    return np.concatenate([np.concatenate(pair, axis=-1) for pair in grads], axis=-1)


def reparameterize(mu: np.ndarray, logvar: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """z = mu + sigma * eps."""
    return mu + np.exp(0.5 * logvar) * eps


def reparameterize_backward(
    grad_z: np.ndarray, logvar: np.ndarray, eps: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Gradients of a loss through z = mu + exp(logvar / 2) * eps.

    dz/dmu = 1, dz/dsigma = eps, dz/dlogvar = eps * sigma / 2.
    """
    return grad_z, grad_z * eps * 0.5 * np.exp(0.5 * logvar)


def diag_gaussian_log_prob(z: np.ndarray, mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """Log density of a diagonal Gaussian, summed over the last axis."""
    return -0.5 * np.sum(LOG_TWO_PI + np.log(var) + (z - mu) ** 2 / var, axis=-1)


def _check_variance(var: np.ndarray, operation: str) -> None:
    if not np.all(np.isfinite(var)):
        raise NonFiniteError(operation, "variance")
    if np.any(var <= 0.0):
        raise ComputationError(
            ErrorCode.COMPUTATION_INVALID_INPUT, operation, "variance must be positive"
        )


def kl_diag_gaussian(
    mu1: np.ndarray, var1: np.ndarray, mu2: np.ndarray | float, var2: np.ndarray | float
) -> np.ndarray:
    """
    KL(N(mu1, var1) || N(mu2, var2)) for diagonal Gaussians, summed over the last axis.

    Returns a scalar for vectors and one value per row for batches.

    Raises:
        ComputationError: If a variance is not positive.
    """
    var1 = np.asarray(var1, dtype=np.float64)
    var2 = np.broadcast_to(np.asarray(var2, dtype=np.float64), var1.shape)
    _check_variance(var1, "kl divergence")
    _check_variance(var2, "kl divergence")
    diff = np.asarray(mu1, dtype=np.float64) - mu2
    return 0.5 * np.sum(np.log(var2 / var1) + (var1 + diff**2) / var2 - 1.0, axis=-1)


def kl_diag_gaussian_grad(
    mu1: np.ndarray, logvar1: np.ndarray, mu2: np.ndarray | float, var2: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``kl_diag_gaussian`` with respect to mu1 and logvar1."""
    return (mu1 - mu2) / var2, 0.5 * (np.exp(logvar1) / var2 - 1.0)


@dataclass
class GaussianSample:
    """Output of a Gaussian head evaluation."""

    mu: np.ndarray
    sigma2: np.ndarray
    logvar: np.ndarray
    z: np.ndarray
    log_prob: np.ndarray
    eps: np.ndarray
    record: GradientRecord


def gaussian_head(
    params: NetworkParams,
    spec: NetworkSpec,
    inputs: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    head: int = 0,
    eps: Optional[np.ndarray] = None,
) -> GaussianSample:
    """
    Evaluates a Gaussian network and draws a reparameterized sample of one head.

    Either ``rng`` or a frozen ``eps`` must be supplied.

    Raises:
        NonFiniteError: If the variance is not finite.
        ShapeMismatchError: If a frozen ``eps`` has the wrong shape.
    """
    output, record = mlp_forward(params, spec, inputs)
    mu, logvar = split_heads(output, spec)[head]
    sigma2 = np.exp(logvar)
    if not np.all(np.isfinite(sigma2)):
        raise NonFiniteError("gaussian head", "sigma2")
    if eps is None:
        if rng is None:
            raise ComputationError(
                ErrorCode.COMPUTATION_INVALID_INPUT, "gaussian head", "rng or eps required"
            )
        eps = rng.standard_normal(mu.shape)
    elif np.shape(eps) != mu.shape:
        raise ShapeMismatchError("gaussian head eps", mu.shape, np.shape(eps))
    z = reparameterize(mu, logvar, eps)
    return GaussianSample(
        mu=mu,
        sigma2=sigma2,
        logvar=logvar,
        z=z,
        log_prob=diag_gaussian_log_prob(z, mu, sigma2),
        eps=np.asarray(eps, dtype=np.float64),
        record=record,
    )


def gaussian_head_backward(
    sample: GaussianSample,
    spec: NetworkSpec,
    grad_z: np.ndarray,
    grad_mu: np.ndarray | None = None,
    grad_logvar: np.ndarray | None = None,
    head: int = 0,
) -> tuple[NetworkParams, np.ndarray]:
    """
    Backpropagates through the sample and the direct (mu, logvar) terms of one head.

    ``grad_z`` flows through the reparameterization; ``grad_mu`` and ``grad_logvar``
    are added as-is (KL terms). Other heads receive zero gradient.

    Returns:
        (network parameter gradients, input gradient)
    """
    d_mu, d_logvar = reparameterize_backward(grad_z, sample.logvar, sample.eps)
    if grad_mu is not None:
        d_mu = d_mu + grad_mu
    if grad_logvar is not None:
        d_logvar = d_logvar + grad_logvar
    pairs = [
        (np.zeros_like(d_mu), np.zeros_like(d_logvar)) for _ in range(spec.gaussian_heads)
    ]
    pairs[head] = (d_mu, d_logvar)
    return backward(sample.record, merge_head_gradients(pairs))
