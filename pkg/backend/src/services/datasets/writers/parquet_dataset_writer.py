import logging

import pandas as pd

from backend.src.common.known_exception import FileWriteError
from backend.src.services.datasets.writers.dataset_writer import DatasetWriter

logger = logging.getLogger(__name__)


class ParquetDatasetWriter(DatasetWriter):
    """Writes feature tables as float64 Parquet through pyarrow."""

    suffix = "parquet"

    def write_table(self, frame: pd.DataFrame, path: str) -> None:
        try:
            frame.to_parquet(path, engine="pyarrow", index=False)
        except OSError as e:
            logger.exception("Error writing dataset table: %s", path)
            raise FileWriteError(path, details=str(e)) from e
