"""
Base module for loading persisted datasets.
"""

from __future__ import annotations

import logging
import os
import time
from abc import ABC, abstractmethod

import numpy as np
import pandas as pd

from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import DatasetError, FileNotFoundError, FileSystemError
from backend.src.schemas.dataset import DatasetManifest
from backend.src.services.datasets.dataset import Dataset
from backend.src.services.datasets.normalization import NormalizationStats
from backend.src.utils.helpers import read_file

logger = logging.getLogger(__name__)


class DatasetReader(ABC):
    """
    Abstract base class for dataset readers.
    """

    suffix: str = ""

    def __init__(self, directory: str):
        self.directory: str = directory

    def table_path(self, name: str) -> str:
        return os.path.join(self.directory, f"{name}.{self.suffix}")

    @abstractmethod
    def read_table(self, path: str) -> pd.DataFrame:
        """
        Read the feature table.

        Raises:
            FileReadError: If the file cannot be parsed.
        """

    def read(self, name: str) -> Dataset:
        """
        Loads a dataset and checks it against its manifest.

        Raises:
            FileNotFoundError: If the table or manifest is missing.
            FileSystemError: If the table does not match the manifest hash.
            DatasetError: If the table shape does not match the manifest.
        """
        start = time.time()
        path = self.table_path(name)
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        manifest = DatasetManifest.model_validate(
            read_file(os.path.join(self.directory, f"{name}.json"))
        )
        features = self.read_table(path).to_numpy(dtype=np.float64)
        if features.shape != (manifest.count, manifest.datum_length):
            raise DatasetError(
                ErrorCode.VALIDATION_LENGTH_MISMATCH,
                "dataset table",
                f"{features.shape} vs manifest ({manifest.count}, {manifest.datum_length})",
            )
        expected_hash = manifest.content_hash
        stats = None
        if manifest.normalization_ref:
            stats = NormalizationStats.load(
                os.path.join(self.directory, manifest.normalization_ref)
            )
        dataset = Dataset(features=features, manifest=manifest, stats=stats)
        if expected_hash and dataset.manifest.content_hash != expected_hash:
            raise FileSystemError(ErrorCode.FILE_HASH_MISMATCH, path)

        logger.info(
            "dataset %s with %d datums read in %.2f seconds",
            name,
            len(dataset),
            time.time() - start,
        )
        return dataset
