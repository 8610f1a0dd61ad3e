"""
Unit tests for the fixed-length datum encoding and normalization.
"""

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from backend.src.common.constants import (
    DATUM_DURATION_INDEX,
    DATUM_LENGTH,
    DATUM_NODES,
    DATUM_WX_INDEX,
)
from backend.src.common.enums import ParamsId, TerminationReason
from backend.src.common.known_exception import DatasetError, ShapeMismatchError
from backend.src.schemas.trajectory import Trajectory
from backend.src.services.datasets.datum import (
    clamp_durations,
    pack_datum,
    resample_fixed_length,
    trajectory_to_datum,
    unpack_datum,
)
from backend.src.services.datasets.normalization import NormalizationStats


def linear_trajectory(duration: float = 7.0, dt: float = 0.05) -> Trajectory:
    steps = round(duration / dt)
    times = np.arange(steps + 1) * dt
    states = np.zeros((steps + 1, 6))
    states[:, 0] = 2.0 * times
    states[:, 1] = 150.0 - 3.0 * times
    controls = np.tile(np.array([1000.0, 10.0, -10.0]), (steps, 1))
    return Trajectory(
        times=times,
        states=states,
        controls=controls,
        wind=np.array([1.5, -0.25]),
        params_id=ParamsId.PA,
        terminated_by=TerminationReason.TIMEOUT,
    )


class TestResampling(unittest.TestCase):
    """Resampling onto uniform nodes."""

    def test_linear_channels_are_reproduced(self):
        states, controls, duration = resample_fixed_length(linear_trajectory())
        grid = np.linspace(0.0, duration, DATUM_NODES)
        np.testing.assert_allclose(states[:, 0], 2.0 * grid, atol=1e-12)
        np.testing.assert_allclose(states[:, 1], 150.0 - 3.0 * grid, atol=1e-12)
        np.testing.assert_allclose(controls, np.tile([1000.0, 10.0, -10.0], (DATUM_NODES, 1)))
        self.assertAlmostEqual(duration, 7.0)

    def test_endpoints_are_exact(self):
        trajectory = linear_trajectory(duration=3.3)
        states, _, _ = resample_fixed_length(trajectory)
        np.testing.assert_array_equal(states[0], trajectory.states[0])
        np.testing.assert_array_equal(states[-1], trajectory.states[-1])

    def test_datum_layout(self):
        datum = trajectory_to_datum(linear_trajectory())
        self.assertEqual(datum.shape, (DATUM_LENGTH,))
        np.testing.assert_array_equal(datum[DATUM_WX_INDEX : DATUM_WX_INDEX + 2], [1.5, -0.25])
        self.assertAlmostEqual(datum[DATUM_DURATION_INDEX], 7.0)
        parts = unpack_datum(datum)
        self.assertAlmostEqual(parts.dt, 7.0 / (DATUM_NODES - 1))

    def test_too_short_trajectory(self):
        single = Trajectory(
            times=np.zeros(1),
            states=np.zeros((1, 6)),
            controls=np.zeros((0, 3)),
            wind=np.zeros(2),
            params_id=ParamsId.PA,
            terminated_by=TerminationReason.TOUCHDOWN,
        )
        with self.assertRaises(DatasetError):
            resample_fixed_length(single)

    def test_wrong_lengths(self):
        with self.assertRaises(DatasetError):
            unpack_datum(np.zeros(DATUM_LENGTH - 1))
        with self.assertRaises(DatasetError):
            pack_datum(np.zeros((99, 6)), np.zeros((100, 3)), np.zeros(2), 1.0)

    def test_clamp_durations(self):
        features = np.zeros((2, DATUM_LENGTH))
        features[:, DATUM_DURATION_INDEX] = [0.02, 5.0]
        clamped = clamp_durations(features, 0.1)
        np.testing.assert_array_equal(clamped[:, DATUM_DURATION_INDEX], [0.1, 5.0])
        self.assertEqual(features[0, DATUM_DURATION_INDEX], 0.02)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, DATUM_LENGTH, elements=st.floats(-1e6, 1e6)))
def test_unpack_then_pack_is_identity(datum: np.ndarray) -> None:
    parts = unpack_datum(datum)
    np.testing.assert_array_equal(
        pack_datum(parts.states, parts.controls, parts.wind, parts.duration), datum
    )


class TestNormalization(unittest.TestCase):
    """Feature standardization."""

    def test_apply_then_invert(self):
        features = np.random.default_rng(0).normal(5.0, 3.0, size=(20, 7))
        stats = NormalizationStats.fit(features)
        np.testing.assert_allclose(stats.invert(stats.apply(features)), features, atol=1e-10)
        np.testing.assert_allclose(stats.apply(features).mean(axis=0), 0.0, atol=1e-12)

    def test_constant_feature_uses_std_floor(self):
        features = np.ones((4, 2))
        stats = NormalizationStats.fit(features)
        np.testing.assert_array_equal(stats.std, [1e-8, 1e-8])
        np.testing.assert_array_equal(stats.apply(features), 0.0)

    def test_needs_two_rows(self):
        with self.assertRaises(DatasetError):
            NormalizationStats.fit(np.ones((1, 3)))

    def test_width_mismatch(self):
        stats = NormalizationStats.fit(np.random.default_rng(0).normal(size=(5, 3)))
        with self.assertRaises(ShapeMismatchError):
            stats.apply(np.zeros((2, 4)))
