"""
Unit tests for diagonal Gaussian utilities.
"""

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from backend.src.common.enums import OutputHead
from backend.src.common.known_exception import ComputationError, ShapeMismatchError
from backend.src.services.nn.gaussian import (
    diag_gaussian_log_prob,
    gaussian_head,
    gaussian_head_backward,
    kl_diag_gaussian,
    kl_diag_gaussian_grad,
    split_heads,
)
from backend.src.services.nn.network import NetworkSpec, init_params
from backend.tests.gradient_check import assert_gradient_matches


class TestClosedForms(unittest.TestCase):
    """Density and divergence values."""

    def test_standard_normal_log_density_at_zero(self):
        value = diag_gaussian_log_prob(np.zeros(1), np.zeros(1), np.ones(1))
        self.assertAlmostEqual(float(value), -0.5 * math.log(2 * math.pi), places=12)
        self.assertAlmostEqual(float(value), -0.9189, places=4)

    def test_kl_against_shifted_wider_prior(self):
        value = kl_diag_gaussian(np.zeros(1), np.ones(1), 1.0, 2.0)
        self.assertAlmostEqual(float(value), 0.5 * (math.log(2.0) + 1.0 - 1.0), places=12)
        self.assertAlmostEqual(float(value), 0.34657, delta=1e-5)

    def test_kl_of_identical_distributions_is_zero(self):
        mu = np.array([[0.3, -1.2], [2.0, 0.0]])
        var = np.array([[0.5, 1.5], [3.0, 0.1]])
        np.testing.assert_allclose(kl_diag_gaussian(mu, var, mu, var), 0.0, atol=1e-12)

    def test_kl_rejects_non_positive_variance(self):
        with self.assertRaises(ComputationError):
            kl_diag_gaussian(np.zeros(2), np.array([1.0, 0.0]), 0.0, 1.0)

    def test_kl_gradient(self):
        mu = np.array([0.4, -0.3])
        logvar = np.array([0.2, -0.5])
        d_mu, d_logvar = kl_diag_gaussian_grad(mu, logvar, 1.0, 2.0)
        h = 1e-6
        for i in range(2):
            e = np.eye(2)[i] * h
            num_mu = (
                kl_diag_gaussian(mu + e, np.exp(logvar), 1.0, 2.0)
                - kl_diag_gaussian(mu - e, np.exp(logvar), 1.0, 2.0)
            ) / (2 * h)
            num_lv = (
                kl_diag_gaussian(mu, np.exp(logvar + e), 1.0, 2.0)
                - kl_diag_gaussian(mu, np.exp(logvar - e), 1.0, 2.0)
            ) / (2 * h)
            self.assertAlmostEqual(d_mu[i], float(num_mu), places=6)
            self.assertAlmostEqual(d_logvar[i], float(num_lv), places=6)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(-3.0, 3.0),
    st.floats(-3.0, 3.0),
    st.floats(0.05, 5.0),
    st.floats(0.05, 5.0),
)
def test_kl_is_non_negative(mu1: float, mu2: float, var1: float, var2: float) -> None:
    assert float(kl_diag_gaussian(np.array([mu1]), np.array([var1]), mu2, var2)) >= -1e-12


class TestGaussianHead(unittest.TestCase):
    """Head sampling and backpropagation."""

    def setUp(self):
        self.spec = NetworkSpec(
            layer_widths=(4, 6, 2), output_head=OutputHead.GAUSSIAN, gaussian_heads=2
        )
        self.params = init_params(self.spec, np.random.default_rng(3))
        self.inputs = np.random.default_rng(4).normal(size=(5, 4))

    def test_frozen_noise_is_reproducible(self):
        eps = np.random.default_rng(0).standard_normal((5, 2))
        first = gaussian_head(self.params, self.spec, self.inputs, eps=eps, head=1)
        second = gaussian_head(self.params, self.spec, self.inputs, eps=eps, head=1)
        np.testing.assert_array_equal(first.z, second.z)
        mu, logvar = split_heads(first.record.output, self.spec)[1]
        np.testing.assert_allclose(first.z, mu + np.exp(0.5 * logvar) * eps)

    def test_wrong_noise_shape(self):
        with self.assertRaises(ShapeMismatchError):
            gaussian_head(self.params, self.spec, self.inputs, eps=np.zeros((5, 3)))

    def test_missing_noise_source(self):
        with self.assertRaises(ComputationError):
            gaussian_head(self.params, self.spec, self.inputs)

    def test_backward_through_sample_and_kl(self):
        eps = np.random.default_rng(1).standard_normal((5, 2))
        target = np.random.default_rng(2).normal(size=(5, 2))

        def loss(candidate):
            sample = gaussian_head(candidate, self.spec, self.inputs, eps=eps, head=1)
            kl = kl_diag_gaussian(sample.mu, sample.sigma2, 1.0, 2.0)
            return float(0.5 * np.sum((sample.z - target) ** 2) + np.sum(kl))

        sample = gaussian_head(self.params, self.spec, self.inputs, eps=eps, head=1)
        d_mu, d_logvar = kl_diag_gaussian_grad(sample.mu, sample.logvar, 1.0, 2.0)
        grads, _ = gaussian_head_backward(
            sample, self.spec, sample.z - target, grad_mu=d_mu, grad_logvar=d_logvar, head=1
        )
        assert_gradient_matches(loss, self.params, grads)
