"""
Base module for persisting datasets.

A dataset stored under ``<directory>/<name>`` consists of the feature table
``<name>.<suffix>`` (columns f0 ... f902), the manifest ``<name>.json`` and, when the
dataset carries normalization statistics, ``<name>.stats.json``.
"""

from __future__ import annotations

import logging
import os
import time
from abc import ABC, abstractmethod

import pandas as pd

from backend.src.services.datasets.dataset import Dataset
from backend.src.utils.helpers import ensure_dir, write_json

logger = logging.getLogger(__name__)


def feature_columns(width: int) -> list[str]:
    return [f"f{i}" for i in range(width)]


class DatasetWriter(ABC):
    """
    Abstract base class for dataset writers.
    """

    suffix: str = ""

    def __init__(self, directory: str):
        self.directory: str = ensure_dir(directory)

    def table_path(self, name: str) -> str:
        return os.path.join(self.directory, f"{name}.{self.suffix}")

    @abstractmethod
    def write_table(self, frame: pd.DataFrame, path: str) -> None:
        """
        Write the feature table.

        Raises:
            FileWriteError: If the file cannot be written.
        """

    def write(self, dataset: Dataset) -> str:
        """
        Writes the feature table, the manifest and the statistics sidecar.

        Returns:
            Path of the feature table.
        """
        start = time.time()
        base = os.path.join(self.directory, dataset.name)
        frame = pd.DataFrame(dataset.features, columns=feature_columns(dataset.features.shape[1]))
        path = self.table_path(dataset.name)
        self.write_table(frame, path)

        if dataset.stats is not None:
            stats_name = f"{dataset.name}.stats.json"
            dataset.stats.save(os.path.join(self.directory, stats_name))
            dataset.manifest.normalization_ref = stats_name
        write_json(f"{base}.json", dataset.manifest.model_dump(mode="json"))

        logger.info(
            "dataset %s with %d datums written to %s in %.2f seconds",
            dataset.name,
            len(dataset),
            path,
            time.time() - start,
        )
        return path
