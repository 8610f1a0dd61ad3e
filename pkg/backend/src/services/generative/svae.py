"""
Standard VAE over standardized datums.

Loss per batch: mean ||x - D(z)||^2 + kl_weight * mean KL(q(z|x) || N(0, I)), with z
drawn by reparameterization.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import ClassVar, Optional

import numpy as np
import pandas as pd

from backend.src.common.enums import OutputHead, ParamsId
from backend.src.common.known_exception import TrainingDivergenceError
from backend.src.core.config_loader import VaeTrainConfig
from backend.src.schemas.dataset import DatasetSource
from backend.src.schemas.vehicle import VehicleParams
from backend.src.services.datasets.dataset import Dataset, dataset_from_features
from backend.src.services.datasets.datum import clamp_durations
from backend.src.services.datasets.normalization import NormalizationStats
from backend.src.services.nn.gaussian import (
    gaussian_head,
    gaussian_head_backward,
    kl_diag_gaussian,
    kl_diag_gaussian_grad,
)
from backend.src.services.nn.network import (
    CompositeParams,
    NetworkParams,
    NetworkSpec,
    backward,
    init_params,
    mlp_forward,
)
from backend.src.services.nn.optim import adam_init, adam_step

logger = logging.getLogger(__name__)


def encoder_spec(
    input_dim: int, config: VaeTrainConfig, heads: int = 1
) -> NetworkSpec:
    hidden = [config.hidden_width] * config.hidden_layers
    return NetworkSpec(
        layer_widths=(input_dim, *hidden, config.latent_dim),
        layer_norm=config.layer_norm,
        output_head=OutputHead.GAUSSIAN,
        gaussian_heads=heads,
    )


def decoder_spec(latent_dim: int, output_dim: int, config: VaeTrainConfig) -> NetworkSpec:
    hidden = [config.hidden_width] * config.hidden_layers
    return NetworkSpec(
        layer_widths=(latent_dim, *hidden, output_dim),
        layer_norm=config.layer_norm,
    )


@dataclass
class SvaeModel(CompositeParams):
    """Encoder with one Gaussian head and a plain decoder."""

    param_fields: ClassVar[tuple[str, ...]] = ("encoder", "decoder")

    encoder_spec: NetworkSpec
    decoder_spec: NetworkSpec
    encoder: NetworkParams
    decoder: NetworkParams

    @classmethod
    def create(
        cls, rng: np.random.Generator, input_dim: int, config: VaeTrainConfig
    ) -> SvaeModel:
        enc = encoder_spec(input_dim, config)
        dec = decoder_spec(config.latent_dim, input_dim, config)
        return cls(
            encoder_spec=enc,
            decoder_spec=dec,
            encoder=init_params(enc, rng),
            decoder=init_params(dec, rng),
        )

    @property
    def latent_dim(self) -> int:
        return self.encoder_spec.output_dim

    def specs(self) -> dict:
        return {
            "encoder": self.encoder_spec.model_dump(mode="json"),
            "decoder": self.decoder_spec.model_dump(mode="json"),
        }

    def decode(self, z: np.ndarray) -> np.ndarray:
        output, _ = mlp_forward(self.decoder, self.decoder_spec, z)
        return output


@dataclass
class SvaeLoss:
    """Loss value, its parts and the gradient."""

    loss: float
    recon: float
    kl: float
    grads: SvaeModel


def reconstruction_error(
    inputs: np.ndarray, outputs: np.ndarray
) -> tuple[float, np.ndarray]:
    """Batch mean of the squared error summed over features, and d/d outputs."""
    n = inputs.shape[0]
    residual = outputs - inputs
    return float(np.sum(residual**2) / n), 2.0 * residual / n


def svae_loss(
    model: SvaeModel,
    batch: np.ndarray,
    kl_weight: float,
    rng: Optional[np.random.Generator] = None,
    eps: Optional[np.ndarray] = None,
) -> SvaeLoss:
    """
    Loss and gradients on a standardized batch; pass a frozen ``eps`` for exact replays.

    Raises:
        TrainingDivergenceError: If the loss is not finite.
    """
    n = batch.shape[0]
    sample = gaussian_head(model.encoder, model.encoder_spec, batch, rng=rng, eps=eps)
    outputs, dec_record = mlp_forward(model.decoder, model.decoder_spec, sample.z)
    recon, grad_out = reconstruction_error(batch, outputs)
    kl = float(np.mean(kl_diag_gaussian(sample.mu, sample.sigma2, 0.0, 1.0)))
    loss = recon + kl_weight * kl
    if not np.isfinite(loss):
        raise TrainingDivergenceError("svae", 0, f"recon: {recon}, kl: {kl}")

    dec_grads, grad_z = backward(dec_record, grad_out)
    kl_mu, kl_logvar = kl_diag_gaussian_grad(sample.mu, sample.logvar, 0.0, 1.0)
    scale = kl_weight / n
    enc_grads, _ = gaussian_head_backward(
        sample, model.encoder_spec, grad_z, scale * kl_mu, scale * kl_logvar
    )
    grads = SvaeModel(
        encoder_spec=model.encoder_spec,
        decoder_spec=model.decoder_spec,
        encoder=enc_grads,
        decoder=dec_grads,
    )
    return SvaeLoss(loss=loss, recon=recon, kl=kl, grads=grads)


@dataclass
class SvaeTrainResult:
    model: SvaeModel
    stats: NormalizationStats
    log: pd.DataFrame


def as_features(data: Dataset | np.ndarray) -> np.ndarray:
    return data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)


def train_svae(
    data: Dataset | np.ndarray,
    config: VaeTrainConfig,
    seed: int,
    epochs: Optional[int] = None,
    progress_interval: int = 10,
) -> SvaeTrainResult:
    """
    Trains on data standardized with statistics fit on itself.

    Epoch-shuffled minibatches with Adam; the log holds per-epoch means of the loss terms.

    Raises:
        TrainingDivergenceError: If the loss becomes non-finite.
    """
    start_time = time.time()
    features = as_features(data)
    stats = NormalizationStats.fit(features)
    standardized = stats.apply(features)
    rng = np.random.default_rng(seed)
    model = SvaeModel.create(rng, features.shape[1], config)
    opt = adam_init(model, config.learning_rate)
    total_epochs = epochs or config.svae_epochs
    rows = []
    for epoch in range(total_epochs):
        order = rng.permutation(standardized.shape[0])
        terms = []
        for start in range(0, order.size, config.batch_size):
            idx = order[start : start + config.batch_size]
            try:
                result = svae_loss(model, standardized[idx], config.kl_weight, rng=rng)
            except TrainingDivergenceError as e:
                raise TrainingDivergenceError("svae", epoch, e.details) from e
            model, opt = adam_step(model, result.grads, opt)
            terms.append((result.loss, result.recon, result.kl))
        loss, recon, kl = np.mean(terms, axis=0)
        rows.append({"epoch": epoch, "loss": loss, "recon": recon, "kl": kl})
        if (epoch + 1) % progress_interval == 0:
            logger.info(
                "svae epoch %d/%d: loss %.4f, recon %.4f, kl %.4f",
                epoch + 1,
                total_epochs,
                loss,
                recon,
                kl,
            )
    logger.info("svae training finished in %.2f seconds", time.time() - start_time)
    return SvaeTrainResult(model=model, stats=stats, log=pd.DataFrame(rows))


def svae_sample_features(
    model: SvaeModel, stats: NormalizationStats, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Decodes ``n`` prior draws and maps them back to feature units."""
    z = rng.standard_normal((n, model.latent_dim))
    return stats.invert(model.decode(z))


def svae_generate(
    model: SvaeModel,
    stats: NormalizationStats,
    n: int,
    seed: int,
    params: dict[ParamsId, VehicleParams],
    name: str = "svae-synthetic",
    recipe: Optional[str] = None,
    sources: Optional[list[DatasetSource]] = None,
) -> Dataset:
    """
    Synthesizes ``n`` datums from prior latent draws.

    Durations are clamped to at least two timesteps of the slowest parameter set.
    """
    rng = np.random.default_rng(seed)
    min_duration = 2.0 * max(p.dt for p in params.values())
    features = clamp_durations(svae_sample_features(model, stats, n, rng), min_duration)
    dataset = dataset_from_features(
        features, name, params, origin="synthetic", recipe=recipe, seed=seed, sources=sources
    )
    logger.info("svae generated %d datums into %s", n, name)
    return dataset
