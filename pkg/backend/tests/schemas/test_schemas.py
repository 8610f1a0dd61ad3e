"""
Unit tests for the schema models.
"""

import os
import tempfile
import unittest

import numpy as np
from pydantic import ValidationError

from backend.src.common.enums import ParamsId, TerminationReason
from backend.src.common.known_exception import ShapeMismatchError
from backend.src.schemas.dataset import DatasetManifest
from backend.src.schemas.reports import empty_deviation
from backend.src.schemas.run_manifest import (
    MANIFEST_FILENAME,
    RunManifest,
    StageRecord,
    payload_hash,
)
from backend.src.schemas.trajectory import Trajectory
from backend.src.schemas.vehicle import StateBounds, VehicleParams


class TestVehicle(unittest.TestCase):
    """Vehicle parameters and state bounds."""

    def test_presets(self):
        pa = VehicleParams.preset(ParamsId.PA)
        self.assertEqual(pa.u_max, (15000.0, 2000.0, 2000.0))
        self.assertAlmostEqual(pa.hover_thrust, 500.0 * 3.728)
        self.assertEqual(VehicleParams.preset("PB").drag_coeff, 0.4)

    def test_invalid_params(self):
        with self.assertRaises(ValidationError):
            VehicleParams(mass=0.0, gravity=1.0, length=1.0, drag_coeff=0.0, dt=0.1, u_max=(1, 1, 1))
        with self.assertRaises(ValidationError):
            VehicleParams(mass=1.0, gravity=-1.0, length=1.0, drag_coeff=0.0, dt=0.1, u_max=(1, 1, 1))
        zero = VehicleParams(mass=1.0, gravity=0.0, length=1.0, drag_coeff=0.0, dt=0.1, u_max=(1, 1, 1))
        self.assertEqual(zero.hover_thrust, 0.0)

    def test_wind_shifted_final_box(self):
        lower, upper = StateBounds().final_box(np.array([2.0, -1.0]))
        np.testing.assert_allclose(lower[3:], [-5.0, -2.0])
        np.testing.assert_allclose(upper[3:], [1.0, 1.0])

    def test_malformed_bounds(self):
        with self.assertRaises(ValidationError):
            StateBounds(init_lower=(0.0,) * 7)
        with self.assertRaises(ValidationError):
            StateBounds(final_target=(10.0, 0.5, 0.0, 0.0, 0.0))


class TestTrajectory(unittest.TestCase):
    """Trajectory shape checks."""

    def make(self, steps: int, control_rows: int) -> Trajectory:
        return Trajectory(
            times=np.arange(steps) * 0.05,
            states=np.zeros((steps, 6)),
            controls=np.zeros((control_rows, 3)),
            wind=np.zeros(2),
            params_id=ParamsId.PB,
            terminated_by=TerminationReason.TIMEOUT,
        )

    def test_properties(self):
        trajectory = self.make(5, 4)
        self.assertAlmostEqual(trajectory.duration, 0.2)
        self.assertEqual(trajectory.total_reward, 0.0)

    def test_control_rows_must_match(self):
        with self.assertRaises(ShapeMismatchError):
            self.make(5, 5)


class TestRunManifest(unittest.TestCase):
    """Stage records and manifest persistence."""

    def test_payload_hash_ignores_key_order(self):
        self.assertEqual(payload_hash({"a": 1, "b": [1, 2]}), payload_hash({"b": [1, 2], "a": 1}))
        self.assertNotEqual(payload_hash({"a": 1}), payload_hash({"a": 2}))

    def test_digest_tracks_outputs_only(self):
        first = StageRecord(name="s", seed=1, config_hash="c", outputs={"x": "1"}, tool_version="a")
        second = first.model_copy(update={"duration_seconds": 5.0, "tool_version": "b"})
        self.assertEqual(first.digest(), second.digest())
        third = first.model_copy(update={"outputs": {"x": "2"}})
        self.assertNotEqual(first.digest(), third.digest())

    def test_save_and_load(self):
        with tempfile.TemporaryDirectory() as directory:
            self.assertEqual(RunManifest.load(directory, "0.1.0").stages, {})
            manifest = RunManifest(tool_version="0.1.0")
            manifest.stages["ppo-PA"] = StageRecord(
                name="ppo-PA", seed=3, config_hash="c", outputs={"p.bin": "h"}, tool_version="0.1.0"
            )
            path = manifest.save(directory)
            self.assertEqual(os.path.basename(path), MANIFEST_FILENAME)
            loaded = RunManifest.load(directory, "0.2.0")
            self.assertEqual(loaded.tool_version, "0.2.0")
            self.assertEqual(loaded.output_hashes(), {"ppo-PA": {"p.bin": "h"}})


class TestManifests(unittest.TestCase):
    """Dataset manifests and report helpers."""

    def test_as_source(self):
        manifest = DatasetManifest(
            name="real-PA-25", params_ids=[ParamsId.PA], count=25, seed=4, content_hash="abc"
        )
        source = manifest.as_source()
        self.assertEqual((source.name, source.count, source.seed), ("real-PA-25", 25, 4))

    def test_empty_deviation(self):
        report = empty_deviation("broken", 3)
        self.assertEqual(report.evaluated, 0)
        self.assertEqual(report.excluded, 3)
        self.assertEqual(len(report.to_frame()), 6)
