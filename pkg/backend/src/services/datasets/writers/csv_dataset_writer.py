import logging

import pandas as pd

from backend.src.common.known_exception import FileWriteError
from backend.src.services.datasets.writers.dataset_writer import DatasetWriter

logger = logging.getLogger(__name__)

# 17 significant digits round-trip any float64
CSV_FLOAT_FORMAT = "%.17g"


class CsvDatasetWriter(DatasetWriter):
    """Writes feature tables as CSV with a header row."""

    suffix = "csv"

    def write_table(self, frame: pd.DataFrame, path: str) -> None:
        try:
            frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        except OSError as e:
            logger.exception("Error writing dataset table: %s", path)
            raise FileWriteError(path, details=str(e)) from e
