import logging

import pandas as pd

from backend.src.common.known_exception import FileReadError
from backend.src.services.datasets.readers.dataset_reader import DatasetReader

logger = logging.getLogger(__name__)


class CsvDatasetReader(DatasetReader):
    """Reads CSV feature tables with exact float parsing."""

    suffix = "csv"

    def read_table(self, path: str) -> pd.DataFrame:
        try:
            return pd.read_csv(path, float_precision="round_trip")
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            logger.exception("Error reading dataset table: %s", path)
            raise FileReadError(path, details=str(e)) from e
