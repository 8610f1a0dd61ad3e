"""
Feature-wise standardization of datums.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from backend.src.common.constants import NORMALIZATION_STD_FLOOR
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import DatasetError, ShapeMismatchError
from backend.src.utils.helpers import read_file, write_json

logger = logging.getLogger(__name__)


@dataclass
class NormalizationStats:
    """Per-feature mean and floored population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> NormalizationStats:
        """
        Fits statistics on a (count, features) matrix.

        Raises:
            DatasetError: If fewer than two rows are given.
        """
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 2:
            raise DatasetError(
                ErrorCode.VALIDATION_INVALID_LENGTH,
                "normalization rows",
                str(features.shape),
            )
        std = np.maximum(features.std(axis=0), NORMALIZATION_STD_FLOOR)
        return cls(mean=features.mean(axis=0), std=std)

    def _check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.mean.shape[0]:
            raise ShapeMismatchError("normalization", self.mean.shape[0], values.shape[-1])
        return values

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self._check(values) - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return self._check(values) * self.std + self.mean

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> NormalizationStats:
        return cls(
            mean=np.asarray(payload["mean"], dtype=np.float64),
            std=np.asarray(payload["std"], dtype=np.float64),
        )

    def save(self, path: str) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str) -> NormalizationStats:
        return cls.from_dict(read_file(path))
