"""
Dataset manifest models.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt

from backend.src.common.constants import DATUM_LENGTH
from backend.src.common.enums import ParamsId
from backend.src.schemas.vehicle import VehicleParams


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class DatasetSource(BaseModel):
    """Provenance record of one input of a merged or derived dataset."""

    model_config = ConfigDict(extra="forbid")

    name: str
    params_ids: list[ParamsId] = Field(default_factory=list)
    count: NonNegativeInt
    content_hash: str
    seed: Optional[int] = None


class DatasetManifest(BaseModel):
    """
    JSON sidecar of a persisted dataset.

    Attributes:
        name: Dataset name, also the file stem on disk.
        origin: How the datums were produced (simulated, synthetic, merged, subsample).
        recipe: Recipe the dataset belongs to, if any.
        params_ids: Parameter sets the datums were simulated with or modelled on.
        params: Physical constants of those parameter sets; they are not datum features.
        sources: Provenance of every input dataset.
        count: Number of datums.
        seed: Seed of the stream that produced the dataset.
        created_at: UTC creation timestamp.
        datum_length: Feature count of every datum.
        content_hash: SHA-256 of the feature matrix.
        normalization_ref: File name of the normalization statistics sidecar, if any.
        attempts: Episodes simulated to obtain the datums, for simulated datasets.
        successes: Successful episodes among ``attempts``.
    """

    model_config = ConfigDict(extra="forbid")

    name: str
    origin: str = "simulated"
    recipe: Optional[str] = None
    params_ids: list[ParamsId] = Field(default_factory=list)
    params: dict[ParamsId, VehicleParams] = Field(default_factory=dict)
    sources: list[DatasetSource] = Field(default_factory=list)
    count: NonNegativeInt
    seed: Optional[int] = None
    created_at: str = Field(default_factory=utc_timestamp)
    datum_length: int = DATUM_LENGTH
    content_hash: str = ""
    normalization_ref: Optional[str] = None
    attempts: Optional[NonNegativeInt] = None
    successes: Optional[NonNegativeInt] = None

    def as_source(self) -> DatasetSource:
        return DatasetSource(
            name=self.name,
            params_ids=list(self.params_ids),
            count=self.count,
            content_hash=self.content_hash,
            seed=self.seed,
        )
