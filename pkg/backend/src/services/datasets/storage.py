"""
Dataset persistence entry points and the reader/writer factories behind them.
"""

from __future__ import annotations

import logging
from typing import Protocol, runtime_checkable

from backend.src.common.enums import DatasetFormat
from backend.src.common.known_exception import UnknownModeError
from backend.src.services.datasets.dataset import Dataset
from backend.src.services.datasets.readers.csv_dataset_reader import CsvDatasetReader
from backend.src.services.datasets.readers.dataset_reader import DatasetReader
from backend.src.services.datasets.readers.parquet_dataset_reader import (
    ParquetDatasetReader,
)
from backend.src.services.datasets.writers.csv_dataset_writer import CsvDatasetWriter
from backend.src.services.datasets.writers.dataset_writer import DatasetWriter
from backend.src.services.datasets.writers.parquet_dataset_writer import (
    ParquetDatasetWriter,
)

logger = logging.getLogger(__name__)


@runtime_checkable
class DatasetReaderFactory(Protocol):
    """Protocol for dataset reader factory implementations."""

    def create_reader(self, directory: str, dataset_format: DatasetFormat) -> DatasetReader:
        """Create a reader for the given format."""


@runtime_checkable
class DatasetWriterFactory(Protocol):
    """Protocol for dataset writer factory implementations."""

    def create_writer(self, directory: str, dataset_format: DatasetFormat) -> DatasetWriter:
        """Create a writer for the given format."""


def _resolve_format(dataset_format: DatasetFormat | str) -> DatasetFormat:
    try:
        return DatasetFormat(dataset_format)
    except ValueError as e:
        raise UnknownModeError(str(dataset_format), [f.value for f in DatasetFormat]) from e


class DefaultDatasetReaderFactory:
    """Default factory for creating dataset readers."""

    def create_reader(
        self, directory: str, dataset_format: DatasetFormat | str
    ) -> DatasetReader:
        """
        Raises:
            UnknownModeError: If the format is not supported.
        """
        if _resolve_format(dataset_format) is DatasetFormat.PARQUET:
            return ParquetDatasetReader(directory)
        return CsvDatasetReader(directory)


class DefaultDatasetWriterFactory:
    """Default factory for creating dataset writers."""

    def create_writer(
        self, directory: str, dataset_format: DatasetFormat | str
    ) -> DatasetWriter:
        """
        Raises:
            UnknownModeError: If the format is not supported.
        """
        if _resolve_format(dataset_format) is DatasetFormat.PARQUET:
            return ParquetDatasetWriter(directory)
        return CsvDatasetWriter(directory)


def save_dataset(
    dataset: Dataset,
    directory: str,
    dataset_format: DatasetFormat | str = DatasetFormat.CSV,
    factory: DatasetWriterFactory | None = None,
) -> str:
    """Persists ``dataset`` and returns the path of its feature table."""
    writer = (factory or DefaultDatasetWriterFactory()).create_writer(directory, dataset_format)
    return writer.write(dataset)


def load_dataset(
    name: str,
    directory: str,
    dataset_format: DatasetFormat | str = DatasetFormat.CSV,
    factory: DatasetReaderFactory | None = None,
) -> Dataset:
    """Loads the dataset ``name`` stored in ``directory``."""
    reader = (factory or DefaultDatasetReaderFactory()).create_reader(directory, dataset_format)
    return reader.read(name)
