"""
In-memory datasets of datums: construction, merging and subsampling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from backend.src.common.constants import DATUM_LENGTH
from backend.src.common.enums import ParamsId
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import DatasetError
from backend.src.schemas.dataset import DatasetManifest, DatasetSource
from backend.src.schemas.trajectory import Trajectory
from backend.src.schemas.vehicle import VehicleParams
from backend.src.services.datasets.datum import DatumParts, trajectory_to_datum, unpack_datum
from backend.src.services.datasets.normalization import NormalizationStats
from backend.src.utils.helpers import content_hash

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    """
    Feature matrix of shape (count, 903) and its manifest.

    The manifest count and content hash are kept in sync with the features.
    """

    features: np.ndarray
    manifest: DatasetManifest
    stats: Optional[NormalizationStats] = field(default=None)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[1] != DATUM_LENGTH:
            raise DatasetError(
                ErrorCode.VALIDATION_INVALID_LENGTH,
                "dataset features",
                str(self.features.shape),
            )
        if not np.all(np.isfinite(self.features)):
            raise DatasetError(
                ErrorCode.VALIDATION_INVALID_PARAMETER, "dataset features", "non-finite"
            )
        if self.manifest.count != self.features.shape[0]:
            raise DatasetError(
                ErrorCode.VALIDATION_LENGTH_MISMATCH,
                "manifest count",
                f"{self.manifest.count} != {self.features.shape[0]}",
            )
        self.manifest.content_hash = content_hash(self.features)

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def name(self) -> str:
        return self.manifest.name

    def datum(self, index: int) -> DatumParts:
        return unpack_datum(self.features[index])

    def datums(self) -> Iterable[DatumParts]:
        for row in self.features:
            yield unpack_datum(row)

    def content_hash(self) -> str:
        return content_hash(self.features)

    def fit_stats(self) -> NormalizationStats:
        """Fits and attaches normalization statistics on this dataset."""
        self.stats = NormalizationStats.fit(self.features)
        return self.stats


def dataset_from_features(
    features: np.ndarray,
    name: str,
    params: dict[ParamsId, VehicleParams],
    origin: str = "synthetic",
    recipe: Optional[str] = None,
    seed: Optional[int] = None,
    sources: Optional[list[DatasetSource]] = None,
) -> Dataset:
    """Wraps a feature matrix with a fresh manifest."""
    features = np.asarray(features, dtype=np.float64)
    manifest = DatasetManifest(
        name=name,
        origin=origin,
        recipe=recipe,
        params_ids=sorted(params, key=lambda p: p.value),
        params=params,
        sources=sources or [],
        count=features.shape[0] if features.ndim == 2 else 0,
        seed=seed,
    )
    return Dataset(features=features, manifest=manifest)


def dataset_from_trajectories(
    trajectories: list[Trajectory],
    params_id: ParamsId,
    params: VehicleParams,
    name: str,
    recipe: Optional[str] = None,
    seed: Optional[int] = None,
    only_successful: bool = True,
) -> Dataset:
    """
    Builds an observed training dataset from simulated episodes.

    Raises:
        DatasetError: If no trajectory qualifies.
    """
    kept = [t for t in trajectories if t.success or not only_successful]
    if not kept:
        raise DatasetError(ErrorCode.VALIDATION_INVALID_LENGTH, "qualifying trajectories", "0")
    features = np.vstack([trajectory_to_datum(t) for t in kept])
    manifest = DatasetManifest(
        name=name,
        origin="simulated",
        recipe=recipe,
        params_ids=[ParamsId(params_id)],
        params={ParamsId(params_id): params},
        count=len(kept),
        seed=seed,
        attempts=len(trajectories),
        successes=sum(1 for t in trajectories if t.success),
    )
    logger.info(
        "dataset %s built from %d of %d trajectories", name, len(kept), len(trajectories)
    )
    return Dataset(features=features, manifest=manifest)


def merge(name: str, datasets: list[Dataset], recipe: Optional[str] = None) -> Dataset:
    """
    Concatenates datasets in order and records each one as a source.

    Raises:
        DatasetError: If no dataset is given.
    """
    if not datasets:
        raise DatasetError(ErrorCode.VALIDATION_INVALID_LENGTH, "merge inputs", "0")
    params: dict[ParamsId, VehicleParams] = {}
    for dataset in datasets:
        params.update(dataset.manifest.params)
    features = np.vstack([d.features for d in datasets])
    manifest = DatasetManifest(
        name=name,
        origin="merged",
        recipe=recipe,
        params_ids=sorted(params, key=lambda p: p.value),
        params=params,
        sources=[d.manifest.as_source() for d in datasets],
        count=features.shape[0],
    )
    return Dataset(features=features, manifest=manifest)


def subsample(
    dataset: Dataset, count: int, seed: int, name: Optional[str] = None
) -> Dataset:
    """
    Draws ``count`` datums without replacement; the same seed gives the same subset.

    Raises:
        ValidationError: If ``count`` exceeds the dataset size.
    """
    if count > len(dataset) or count < 1:
        raise DatasetError(
            ErrorCode.VALIDATION_SAMPLE_TOO_LARGE,
            "subsample count",
            f"{count} of {len(dataset)}",
        )
    rng = np.random.default_rng(seed)
    indices = rng.choice(len(dataset), size=count, replace=False)
    manifest = dataset.manifest.model_copy(
        update={
            "name": name or f"{dataset.name}-{count}",
            "origin": "subsample",
            "sources": [dataset.manifest.as_source()],
            "count": count,
            "seed": seed,
            "attempts": None,
            "successes": None,
        }
    )
    return Dataset(features=dataset.features[indices], manifest=manifest)
