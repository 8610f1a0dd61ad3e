"""
Unit tests for the standard VAE.
"""

import unittest

import numpy as np
import pytest

from backend.src.common.constants import DATUM_DURATION_INDEX, DATUM_LENGTH
from backend.src.common.enums import ParamsId
from backend.src.services.generative.svae import (
    SvaeModel,
    reconstruction_error,
    svae_generate,
    svae_loss,
    train_svae,
)
from backend.src.services.nn.gaussian import gaussian_head, kl_diag_gaussian
from backend.src.services.nn.network import flatten
from backend.tests.factories import PA, TINY_VAE as TINY, simulated_dataset
from backend.tests.gradient_check import assert_gradient_matches


class TestSvaeLoss(unittest.TestCase):
    """Loss composition and gradients with frozen noise."""

    def setUp(self):
        rng = np.random.default_rng(0)
        self.model = SvaeModel.create(rng, 6, TINY)
        self.batch = rng.normal(size=(7, 6))
        self.eps = rng.standard_normal((7, 2))

    def test_reconstruction_error(self):
        inputs = np.array([[1.0, 2.0], [0.0, 0.0]])
        outputs = np.array([[2.0, 0.0], [1.0, 1.0]])
        value, grad = reconstruction_error(inputs, outputs)
        self.assertAlmostEqual(value, (1.0 + 4.0 + 1.0 + 1.0) / 2.0)
        np.testing.assert_allclose(grad, [[1.0, -2.0], [1.0, 1.0]])

    def test_loss_is_reconstruction_plus_weighted_kl(self):
        result = svae_loss(self.model, self.batch, 0.7, eps=self.eps)
        self.assertAlmostEqual(result.loss, result.recon + 0.7 * result.kl, delta=1e-10)

        sample = gaussian_head(self.model.encoder, self.model.encoder_spec, self.batch, eps=self.eps)
        expected_recon = np.sum((self.model.decode(sample.z) - self.batch) ** 2) / 7
        expected_kl = np.mean(kl_diag_gaussian(sample.mu, sample.sigma2, 0.0, 1.0))
        self.assertAlmostEqual(result.recon, expected_recon, delta=1e-10)
        self.assertAlmostEqual(result.kl, expected_kl, delta=1e-10)

    def test_gradient_matches_finite_differences(self):
        result = svae_loss(self.model, self.batch, 0.7, eps=self.eps)
        assert_gradient_matches(
            lambda candidate: svae_loss(candidate, self.batch, 0.7, eps=self.eps).loss,
            self.model,
            result.grads,
        )

    def test_same_noise_same_loss(self):
        first = svae_loss(self.model, self.batch, 1.0, eps=self.eps)
        second = svae_loss(self.model, self.batch, 1.0, eps=self.eps)
        self.assertEqual(first.loss, second.loss)

class TestSvaeTraining(unittest.TestCase):
    """Short training runs and generation."""

    def setUp(self):
        self.features = np.random.default_rng(3).normal(2.0, 4.0, size=(10, 6))

    def test_log_and_determinism(self):
        first = train_svae(self.features, TINY, seed=9)
        second = train_svae(self.features, TINY, seed=9)
        self.assertEqual(list(first.log.columns), ["epoch", "loss", "recon", "kl"])
        self.assertEqual(len(first.log), 3)
        self.assertTrue(np.all(np.isfinite(first.log["loss"])))
        np.testing.assert_array_equal(flatten(first.model), flatten(second.model))
        np.testing.assert_allclose(first.stats.mean, self.features.mean(axis=0))

    def test_epoch_override(self):
        result = train_svae(self.features, TINY, seed=9, epochs=1)
        self.assertEqual(len(result.log), 1)

@pytest.mark.slow
def test_generated_dataset_has_valid_durations() -> None:
    dataset = simulated_dataset(count=4, seed=5)
    trained = train_svae(dataset, TINY.model_copy(update={"hidden_width": 8}), seed=2)
    generated = svae_generate(
        trained.model,
        trained.stats,
        5,
        seed=13,
        params={ParamsId.PA: PA},
        name="svae-5",
        recipe="S-VAE-25",
        sources=[dataset.manifest.as_source()],
    )
    assert generated.features.shape == (5, DATUM_LENGTH)
    assert np.all(generated.features[:, DATUM_DURATION_INDEX] >= 2.0 * PA.dt)
    assert generated.manifest.origin == "synthetic"
    assert generated.manifest.recipe == "S-VAE-25"
    assert generated.manifest.sources[0].name == dataset.name
    repeat = svae_generate(trained.model, trained.stats, 5, seed=13, params={ParamsId.PA: PA})
    np.testing.assert_array_equal(repeat.features, generated.features)
