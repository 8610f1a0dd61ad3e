"""
Split-latent VAE over a real and an ideal data domain.

Encoder 1 has two Gaussian heads on a shared trunk: head 0 gives the real-domain
latent z1, head 1 the ideal-domain latent z2. Encoder 2 gives the shared latent z for
either domain. Decoder 1 reconstructs real datums from [z1, z], decoder 2 ideal datums
from [z2, z]. The loss is

    recon1 + recon2 + lambda1 * KL(z1 || N(0, 1)) + lambda2 * KL(z2 || N(m2, v2))
    + lambda4 * KL(z || N(0, 1)) + beta * MI(z1, z2)

with every regularizer entering positively and beta held at zero during warmup. The
shared KL is averaged over the samples of both domains.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import ClassVar, Optional

import numpy as np
import pandas as pd

from backend.src.common.enums import LatentSource, ParamsId
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import (
    DatasetError,
    TrainingDivergenceError,
)
from backend.src.core.config_loader import VaeTrainConfig
from backend.src.schemas.dataset import DatasetSource
from backend.src.schemas.vehicle import VehicleParams
from backend.src.services.datasets.dataset import Dataset, dataset_from_features
from backend.src.services.datasets.datum import clamp_durations
from backend.src.services.datasets.normalization import NormalizationStats
from backend.src.services.generative.mutual_information import MiEmaState, mi_estimate
from backend.src.services.generative.svae import (
    as_features,
    decoder_spec,
    encoder_spec,
    reconstruction_error,
)
from backend.src.services.nn.gaussian import (
    GaussianSample,
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
from backend.src.services.nn.optim import adam_init, adam_step, add_gradients

logger = logging.getLogger(__name__)

REAL_HEAD = 0
IDEAL_HEAD = 1
LOSS_TERMS = ("recon1", "recon2", "kl1", "kl2", "kl_shared", "mi")


@dataclass
class MiVaeModel(CompositeParams):
    """Two encoders and two decoders of the split-latent VAE."""

    param_fields: ClassVar[tuple[str, ...]] = ("encoder1", "encoder2", "decoder1", "decoder2")

    encoder1_spec: NetworkSpec
    encoder2_spec: NetworkSpec
    decoder_spec: NetworkSpec
    encoder1: NetworkParams
    encoder2: NetworkParams
    decoder1: NetworkParams
    decoder2: NetworkParams

    @classmethod
    def create(
        cls, rng: np.random.Generator, input_dim: int, config: VaeTrainConfig
    ) -> MiVaeModel:
        enc1 = encoder_spec(input_dim, config, heads=2)
        enc2 = encoder_spec(input_dim, config)
        dec = decoder_spec(2 * config.latent_dim, input_dim, config)
        return cls(
            encoder1_spec=enc1,
            encoder2_spec=enc2,
            decoder_spec=dec,
            encoder1=init_params(enc1, rng),
            encoder2=init_params(enc2, rng),
            decoder1=init_params(dec, rng),
            decoder2=init_params(dec, rng),
        )

    @property
    def latent_dim(self) -> int:
        return self.encoder1_spec.output_dim

    def specs(self) -> dict:
        return {
            "encoder1": self.encoder1_spec.model_dump(mode="json"),
            "encoder2": self.encoder2_spec.model_dump(mode="json"),
            "decoder": self.decoder_spec.model_dump(mode="json"),
        }


@dataclass
class LossWeights:
    """Weights and priors of the split-latent loss."""

    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda4: float = 1.0
    beta: float = 20.0
    z2_prior_mean: float = 1.0
    z2_prior_var: float = 2.0
    mi_ridge: float = 1e-6

    @classmethod
    def from_config(cls, config: VaeTrainConfig) -> LossWeights:
        return cls(
            lambda1=config.lambda1,
            lambda2=config.lambda2,
            lambda4=config.lambda4,
            beta=config.beta,
            z2_prior_mean=config.z2_prior_mean,
            z2_prior_var=config.z2_prior_var,
            mi_ridge=config.mi_ridge,
        )


@dataclass
class NoiseDraws:
    """Reparameterization noise of one loss evaluation."""

    z1: np.ndarray
    z2: np.ndarray
    shared_real: np.ndarray
    shared_ideal: np.ndarray

    @classmethod
    def sample(cls, rng: np.random.Generator, n: int, latent_dim: int) -> NoiseDraws:
        return cls(*(rng.standard_normal((n, latent_dim)) for _ in range(4)))


@dataclass
class MiVaeLoss:
    """Total loss, its terms (unweighted), gradients and the next EMA state."""

    loss: float
    terms: dict[str, float]
    grads: MiVaeModel
    ema: MiEmaState = field(repr=False)


def _kl_mean(sample: GaussianSample, mean: float, var: float) -> float:
    return float(np.mean(kl_diag_gaussian(sample.mu, sample.sigma2, mean, var)))


def _kl_grads(
    sample: GaussianSample, mean: float, var: float, scale: float
) -> tuple[np.ndarray, np.ndarray]:
    d_mu, d_logvar = kl_diag_gaussian_grad(sample.mu, sample.logvar, mean, var)
    return scale * d_mu, scale * d_logvar


def mivae_loss(
    model: MiVaeModel,
    real: np.ndarray,
    ideal: np.ndarray,
    weights: LossWeights,
    ema: Optional[MiEmaState] = None,
    mi_active: bool = True,
    noise: Optional[NoiseDraws] = None,
    rng: Optional[np.random.Generator] = None,
) -> MiVaeLoss:
    """
    Loss and gradients on a pair of equally sized standardized batches.

    Either ``noise`` or ``rng`` supplies the reparameterization draws. With
    ``mi_active`` false the MI term is still estimated (and the EMA advanced) but
    carries zero weight.

    Raises:
        TrainingDivergenceError: If the loss is not finite.
        EstimatorError: If the MI covariance is not positive definite.
    """
    n = real.shape[0]
    latent = model.latent_dim
    if noise is None:
        noise = NoiseDraws.sample(rng, n, latent)
    if ema is None:
        ema = MiEmaState.empty(2 * latent)

    enc1, enc1_spec = model.encoder1, model.encoder1_spec
    q1 = gaussian_head(enc1, enc1_spec, real, head=REAL_HEAD, eps=noise.z1)
    q2 = gaussian_head(enc1, enc1_spec, ideal, head=IDEAL_HEAD, eps=noise.z2)
    s1 = gaussian_head(model.encoder2, model.encoder2_spec, real, eps=noise.shared_real)
    s2 = gaussian_head(model.encoder2, model.encoder2_spec, ideal, eps=noise.shared_ideal)

    joint1 = np.concatenate([q1.z, s1.z], axis=1)
    joint2 = np.concatenate([q2.z, s2.z], axis=1)
    out1, rec1 = mlp_forward(model.decoder1, model.decoder_spec, joint1)
    out2, rec2 = mlp_forward(model.decoder2, model.decoder_spec, joint2)
    recon1, grad_out1 = reconstruction_error(real, out1)
    recon2, grad_out2 = reconstruction_error(ideal, out2)

    prior_mean, prior_var = weights.z2_prior_mean, weights.z2_prior_var
    kl1 = _kl_mean(q1, 0.0, 1.0)
    kl2 = _kl_mean(q2, prior_mean, prior_var)
    kl_shared = 0.5 * (_kl_mean(s1, 0.0, 1.0) + _kl_mean(s2, 0.0, 1.0))
    mi_result = mi_estimate(q1.z, q2.z, ema, weights.mi_ridge)
    beta = weights.beta if mi_active else 0.0

    terms = {
        "recon1": recon1,
        "recon2": recon2,
        "kl1": kl1,
        "kl2": kl2,
        "kl_shared": kl_shared,
        "mi": mi_result.mi,
    }
    loss = (
        recon1
        + recon2
        + weights.lambda1 * kl1
        + weights.lambda2 * kl2
        + weights.lambda4 * kl_shared
        + beta * mi_result.mi
    )
    if not np.isfinite(loss):
        details = ", ".join(f"{k}: {v}" for k, v in terms.items())
        raise TrainingDivergenceError("mivae", 0, details)

    dec1_grads, grad_in1 = backward(rec1, grad_out1)
    dec2_grads, grad_in2 = backward(rec2, grad_out2)
    grad_z1 = grad_in1[:, :latent] + beta * mi_result.grad_z1
    grad_z2 = grad_in2[:, :latent] + beta * mi_result.grad_z2
    grad_s1, grad_s2 = grad_in1[:, latent:], grad_in2[:, latent:]

    enc1_real, _ = gaussian_head_backward(
        q1,
        model.encoder1_spec,
        grad_z1,
        *_kl_grads(q1, 0.0, 1.0, weights.lambda1 / n),
        head=REAL_HEAD,
    )
    enc1_ideal, _ = gaussian_head_backward(
        q2,
        model.encoder1_spec,
        grad_z2,
        *_kl_grads(q2, prior_mean, prior_var, weights.lambda2 / n),
        head=IDEAL_HEAD,
    )
    shared_scale = 0.5 * weights.lambda4 / n
    enc2_real, _ = gaussian_head_backward(
        s1, model.encoder2_spec, grad_s1, *_kl_grads(s1, 0.0, 1.0, shared_scale)
    )
    enc2_ideal, _ = gaussian_head_backward(
        s2, model.encoder2_spec, grad_s2, *_kl_grads(s2, 0.0, 1.0, shared_scale)
    )

    grads = MiVaeModel(
        encoder1_spec=model.encoder1_spec,
        encoder2_spec=model.encoder2_spec,
        decoder_spec=model.decoder_spec,
        encoder1=add_gradients(enc1_real, enc1_ideal),
        encoder2=add_gradients(enc2_real, enc2_ideal),
        decoder1=dec1_grads,
        decoder2=dec2_grads,
    )
    return MiVaeLoss(loss=float(loss), terms=terms, grads=grads, ema=mi_result.state)


@dataclass
class MiVaeTrainResult:
    model: MiVaeModel
    real_stats: NormalizationStats
    ideal_stats: NormalizationStats
    ema: MiEmaState
    log: pd.DataFrame


def paired_batches(
    n_real: int, n_ideal: int, batch_size: int, rng: np.random.Generator
) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    One epoch of equally sized (real, ideal) index batches.

    The larger domain is shuffled and covered once; the smaller one is resampled with
    replacement to match. Batches of fewer than two rows are dropped.
    """
    larger, smaller = max(n_real, n_ideal), min(n_real, n_ideal)
    order = rng.permutation(larger)
    batches = []
    for start in range(0, larger, batch_size):
        covered = order[start : start + batch_size]
        if covered.size < 2:
            continue
        drawn = rng.integers(0, smaller, size=covered.size)
        batches.append((covered, drawn) if n_real >= n_ideal else (drawn, covered))
    return batches


def train_mivae(
    real: Dataset | np.ndarray,
    ideal: Dataset | np.ndarray,
    config: VaeTrainConfig,
    seed: int,
    epochs: Optional[int] = None,
    progress_interval: int = 10,
) -> MiVaeTrainResult:
    """
    Trains on both domains, each standardized with its own statistics.

    The MI term is weighted from epoch ``warmup_epochs`` (0-based) on. The log holds
    per-epoch means of the loss and of every term.

    Raises:
        TrainingDivergenceError: If the loss becomes non-finite.
    """
    start_time = time.time()
    real_features, ideal_features = as_features(real), as_features(ideal)
    real_stats = NormalizationStats.fit(real_features)
    ideal_stats = NormalizationStats.fit(ideal_features)
    real_std, ideal_std = real_stats.apply(real_features), ideal_stats.apply(ideal_features)

    rng = np.random.default_rng(seed)
    model = MiVaeModel.create(rng, real_features.shape[1], config)
    opt = adam_init(model, config.learning_rate)
    weights = LossWeights.from_config(config)
    ema = MiEmaState.empty(2 * config.latent_dim, config.ema_decay)
    total_epochs = epochs or config.mivae_epochs
    rows = []

    for epoch in range(total_epochs):
        mi_active = epoch >= config.warmup_epochs
        records = []
        for real_idx, ideal_idx in paired_batches(
            real_std.shape[0], ideal_std.shape[0], config.batch_size, rng
        ):
            try:
                result = mivae_loss(
                    model,
                    real_std[real_idx],
                    ideal_std[ideal_idx],
                    weights,
                    ema,
                    mi_active=mi_active,
                    rng=rng,
                )
            except TrainingDivergenceError as e:
                raise TrainingDivergenceError("mivae", epoch, e.details) from e
            model, opt = adam_step(model, result.grads, opt)
            ema = result.ema
            records.append({"loss": result.loss, **result.terms})
        row = {"epoch": epoch, "mi_active": mi_active}
        row.update(pd.DataFrame(records).mean().to_dict())
        rows.append(row)
        if (epoch + 1) % progress_interval == 0:
            logger.info(
                "mivae epoch %d/%d: loss %.4f, recon %.4f/%.4f, mi %.4f",
                epoch + 1,
                total_epochs,
                row["loss"],
                row["recon1"],
                row["recon2"],
                row["mi"],
            )
        logger.debug("mivae epoch %d terms %s", epoch, row)

    logger.info("mivae training finished in %.2f seconds", time.time() - start_time)
    return MiVaeTrainResult(
        model=model,
        real_stats=real_stats,
        ideal_stats=ideal_stats,
        ema=ema,
        log=pd.DataFrame(rows),
    )


def sample_latent_pairs(
    z1_pool: np.ndarray, z_pool: np.ndarray, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draws ``n`` distinct (z1, z) rows from the cross product of the two pools.

    Raises:
        DatasetError: If ``n`` exceeds len(z1_pool) * len(z_pool).
    """
    candidates = z1_pool.shape[0] * z_pool.shape[0]
    if n > candidates:
        raise DatasetError(
            ErrorCode.VALIDATION_SAMPLE_TOO_LARGE,
            "synthetic count",
            f"{n} of {candidates} latent pairs",
        )
    picks = rng.choice(candidates, size=n, replace=False)
    return z1_pool[picks // z_pool.shape[0]], z_pool[picks % z_pool.shape[0]]


def mivae_sample_features(
    model: MiVaeModel,
    real_stats: NormalizationStats,
    ideal_stats: NormalizationStats,
    real_features: np.ndarray,
    ideal_features: np.ndarray,
    n: int,
    rng: np.random.Generator,
    latent_source: LatentSource = LatentSource.POSTERIOR,
) -> np.ndarray:
    """
    Decodes ``n`` real-domain samples with decoder 1, in feature units.

    With posterior latents, z1 is drawn from the encoder-1 posterior of every real datum
    and z from the encoder-2 posterior of every real and ideal datum; ``n`` distinct
    (z1, z) pairs are drawn without replacement from their cross product. With prior
    latents both codes come from N(0, I).

    Raises:
        DatasetError: If ``n`` exceeds the cross-product size.
    """
    latent = model.latent_dim
    if LatentSource(latent_source) is LatentSource.PRIOR:
        z1 = rng.standard_normal((n, latent))
        z = rng.standard_normal((n, latent))
    else:
        real_std = real_stats.apply(real_features)
        ideal_std = ideal_stats.apply(ideal_features)
        z1_pool = gaussian_head(
            model.encoder1, model.encoder1_spec, real_std, rng=rng, head=REAL_HEAD
        ).z
        z_pool = np.vstack(
            [
                gaussian_head(model.encoder2, model.encoder2_spec, real_std, rng=rng).z,
                gaussian_head(model.encoder2, model.encoder2_spec, ideal_std, rng=rng).z,
            ]
        )
        z1, z = sample_latent_pairs(z1_pool, z_pool, n, rng)
    outputs, _ = mlp_forward(model.decoder1, model.decoder_spec, np.concatenate([z1, z], axis=1))
    return real_stats.invert(outputs)


def mivae_generate(
    model: MiVaeModel,
    real: Dataset,
    ideal: Dataset,
    real_stats: NormalizationStats,
    ideal_stats: NormalizationStats,
    n: int,
    seed: int,
    latent_source: LatentSource = LatentSource.POSTERIOR,
    name: str = "mivae-synthetic",
    recipe: Optional[str] = None,
) -> Dataset:
    """
    Synthesizes ``n`` real-domain datums; durations are clamped to at least 2 dt.

    Raises:
        DatasetError: If ``n`` exceeds the number of latent pairs.
    """
    rng = np.random.default_rng(seed)
    params: dict[ParamsId, VehicleParams] = dict(real.manifest.params)
    min_duration = 2.0 * max((p.dt for p in params.values()), default=0.0)
    features = mivae_sample_features(
        model,
        real_stats,
        ideal_stats,
        real.features,
        ideal.features,
        n,
        rng,
        latent_source,
    )
    sources: list[DatasetSource] = [real.manifest.as_source(), ideal.manifest.as_source()]
    dataset = dataset_from_features(
        clamp_durations(features, min_duration),
        name,
        params,
        origin="synthetic",
        recipe=recipe,
        seed=seed,
        sources=sources,
    )
    logger.info(
        "mivae generated %d datums into %s from %s latents",
        n,
        name,
        LatentSource(latent_source).value,
    )
    return dataset
