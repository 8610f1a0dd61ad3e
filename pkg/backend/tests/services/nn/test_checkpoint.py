"""
Unit tests for parameter checkpoints.
"""

import os
import tempfile
import unittest

import numpy as np

from backend.src.common.known_exception import FileSystemError, ShapeMismatchError
from backend.src.services.nn.checkpoint import load_checkpoint, load_manifest, save_checkpoint
from backend.src.services.nn.network import NetworkSpec, init_params


class TestCheckpoint(unittest.TestCase):
    """Checkpoint persistence."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "nets", "policy")
        self.spec = NetworkSpec(layer_widths=(3, 4, 2), layer_norm=True)
        self.params = init_params(self.spec, np.random.default_rng(0))

    def tearDown(self):
        self.tmp.cleanup()

    def test_values_survive_at_float32_precision(self):
        manifest = save_checkpoint(
            self.path, self.params, "policy", specs={"net": self.spec.model_dump()}, seed=5
        )
        self.assertEqual(manifest.count, self.params.count)
        self.assertEqual(os.path.getsize(f"{self.path}.bin"), 4 * self.params.count)
        restored, loaded = load_checkpoint(self.path, self.params)
        self.assertEqual(loaded.seed, 5)
        for left, right in zip(restored.tensors(), self.params.tensors()):
            np.testing.assert_allclose(left, right, rtol=1e-6, atol=1e-7)

    def test_layout_mismatch(self):
        save_checkpoint(self.path, self.params, "policy")
        other = init_params(NetworkSpec(layer_widths=(3, 5, 2)), np.random.default_rng(0))
        with self.assertRaises(ShapeMismatchError):
            load_checkpoint(self.path, other)

    def test_corrupted_binary(self):
        save_checkpoint(self.path, self.params, "policy")
        with open(f"{self.path}.bin", mode="r+b") as handle:
            handle.write(b"\x00\x00\x00\x7f")
        with self.assertRaises(FileSystemError):
            load_checkpoint(self.path, self.params)

    def test_manifest_extra_round_trip(self):
        save_checkpoint(self.path, self.params, "bc", extra={"best_return": -3.5})
        self.assertEqual(load_manifest(self.path).extra["best_return"], -3.5)
