import logging

import pandas as pd
import pyarrow as pa

from backend.src.common.known_exception import FileReadError
from backend.src.services.datasets.readers.dataset_reader import DatasetReader

logger = logging.getLogger(__name__)


class ParquetDatasetReader(DatasetReader):
    """Reads Parquet feature tables through pyarrow."""

    suffix = "parquet"

    def read_table(self, path: str) -> pd.DataFrame:
        try:
            return pd.read_parquet(path, engine="pyarrow")
        except (OSError, pa.ArrowInvalid) as e:
            logger.exception("Error reading dataset table: %s", path)
            raise FileReadError(path, details=str(e)) from e
