"""
Unit tests for dataset construction, persistence and source generation.
"""

import json
import os
import tempfile
import unittest
from unittest.mock import MagicMock

import numpy as np
import pyarrow as pa
import pyarrow.parquet as pq
import pytest

from backend.src.common.enums import DatasetFormat, ParamsId
from backend.src.common.known_exception import (
    DatasetError,
    FileNotFoundError as DatasetFileNotFoundError,
    FileSystemError,
    UnknownModeError,
)
from backend.src.services.datasets.dataset import merge, subsample
from backend.src.services.datasets.normalization import NormalizationStats
from backend.src.services.datasets.sources import generate_source_dataset
from backend.src.services.datasets.storage import (
    DefaultDatasetReaderFactory,
    DefaultDatasetWriterFactory,
    load_dataset,
    save_dataset,
)
from backend.src.services.rl.policy import GaussianPolicy
from backend.tests.factories import env_config, simulated_dataset


class TestStorage(unittest.TestCase):
    """Persistence through the reader and writer factories."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dataset = simulated_dataset(count=3, seed=4)

    def tearDown(self):
        self.tmp.cleanup()

    def test_formats_preserve_every_bit(self):
        for dataset_format in DatasetFormat:
            directory = os.path.join(self.tmp.name, dataset_format.value)
            path = save_dataset(self.dataset, directory, dataset_format)
            self.assertTrue(path.endswith(dataset_format.value))
            loaded = load_dataset(self.dataset.name, directory, dataset_format)
            np.testing.assert_array_equal(loaded.features, self.dataset.features)
            self.assertEqual(loaded.manifest.params, self.dataset.manifest.params)

    def test_parquet_columns_are_double_precision(self):
        path = save_dataset(self.dataset, self.tmp.name, DatasetFormat.PARQUET)
        schema = pq.read_schema(path)
        self.assertEqual(len(schema), self.dataset.features.shape[1])
        self.assertTrue(all(field.type == pa.float64() for field in schema))

    def test_statistics_sidecar(self):
        self.dataset.fit_stats()
        save_dataset(self.dataset, self.tmp.name)
        loaded = load_dataset(self.dataset.name, self.tmp.name)
        self.assertIsInstance(loaded.stats, NormalizationStats)
        np.testing.assert_array_equal(loaded.stats.mean, self.dataset.stats.mean)

    def test_tampered_table_is_detected(self):
        save_dataset(self.dataset, self.tmp.name)
        manifest_path = os.path.join(self.tmp.name, f"{self.dataset.name}.json")
        with open(manifest_path, encoding="utf-8") as handle:
            manifest = json.load(handle)
        manifest["content_hash"] = "0" * 64
        with open(manifest_path, mode="w", encoding="utf-8") as handle:
            json.dump(manifest, handle)
        with self.assertRaises(FileSystemError):
            load_dataset(self.dataset.name, self.tmp.name)

    def test_missing_dataset(self):
        with self.assertRaises(DatasetFileNotFoundError):
            load_dataset("absent", self.tmp.name)

    def test_unknown_format(self):
        with self.assertRaises(UnknownModeError):
            DefaultDatasetWriterFactory().create_writer(self.tmp.name, "hdf5")
        with self.assertRaises(UnknownModeError):
            DefaultDatasetReaderFactory().create_reader(self.tmp.name, "hdf5")

    def test_custom_writer_factory(self):
        writer = MagicMock()
        writer.write.return_value = "somewhere.csv"
        factory = MagicMock()
        factory.create_writer.return_value = writer
        self.assertEqual(
            save_dataset(self.dataset, self.tmp.name, factory=factory), "somewhere.csv"
        )
        factory.create_writer.assert_called_once_with(self.tmp.name, DatasetFormat.CSV)


class TestDatasetOperations(unittest.TestCase):
    """Merging and subsampling."""

    def test_merge_keeps_order_and_provenance(self):
        real = simulated_dataset(count=2, seed=0)
        ideal = simulated_dataset(count=3, seed=1, params_id=ParamsId.PB)
        merged = merge("hybrid", [real, ideal])
        self.assertEqual(len(merged), 5)
        np.testing.assert_array_equal(merged.features[:2], real.features)
        self.assertEqual([s.name for s in merged.manifest.sources], [real.name, ideal.name])
        self.assertEqual(set(merged.manifest.params), {ParamsId.PA, ParamsId.PB})

    def test_merge_needs_inputs(self):
        with self.assertRaises(DatasetError):
            merge("empty", [])

    def test_subsample_is_seeded(self):
        dataset = simulated_dataset(count=5, seed=3)
        first = subsample(dataset, 3, seed=8)
        second = subsample(dataset, 3, seed=8)
        np.testing.assert_array_equal(first.features, second.features)
        self.assertEqual(first.manifest.count, 3)
        with self.assertRaises(DatasetError):
            subsample(dataset, 6, seed=8)


class TestSourceGeneration(unittest.TestCase):
    """Observed dataset simulation."""

    def setUp(self):
        self.policy = GaussianPolicy.create(np.random.default_rng(0), (4,))

    def test_counts_and_attempts(self):
        dataset = generate_source_dataset(
            self.policy,
            env_config(max_steps=20),
            ParamsId.PA,
            count=3,
            seed=1,
            name="real-PA-3",
            only_successful=False,
        )
        self.assertEqual(len(dataset), 3)
        self.assertEqual(dataset.manifest.attempts, 3)
        self.assertEqual(dataset.manifest.params_ids, [ParamsId.PA])

    def test_unreachable_success_count(self):
        with pytest.raises(DatasetError):
            generate_source_dataset(
                self.policy,
                env_config(max_steps=10),
                ParamsId.PA,
                count=2,
                seed=1,
                name="real-PA-2",
                max_attempts_factor=2,
            )
