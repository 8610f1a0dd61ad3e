"""
Run manifest: completion records of the pipeline stages of one output directory.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from backend.src.schemas.dataset import utc_timestamp
from backend.src.utils.helpers import read_file, write_json

logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "run_manifest.json"


def payload_hash(payload: Any) -> str:
    """SHA-256 of a JSON-serializable payload with sorted keys."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class StageRecord(BaseModel):
    """
    A completed stage.

    Attributes:
        name: Stage label, also the label its seed is derived from.
        seed: Stream seed the stage ran with.
        config_hash: Hash of the configuration slice the stage depends on.
        inputs: Output digest of every upstream stage, keyed by stage name.
        outputs: SHA-256 of every data-bearing output file, keyed by path relative to
            the output directory.
        tool_version: Workbench version that produced the outputs.
        duration_seconds: Wall time of the stage.
        completed_at: UTC completion timestamp.
    """

    model_config = ConfigDict(extra="forbid")

    name: str
    seed: int
    config_hash: str
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    tool_version: str
    duration_seconds: float = 0.0
    completed_at: str = Field(default_factory=utc_timestamp)

    def digest(self) -> str:
        """Hash over the output hashes; changes whenever any output changes."""
        return payload_hash(self.outputs)


class RunManifest(BaseModel):
    """
    Attributes:
        tool_version: Workbench version of the last writer.
        configs: Resolved configuration of every recipe run in the directory.
        stages: Completed stages keyed by name; shared stages appear once.
    """

    model_config = ConfigDict(extra="forbid")

    tool_version: str
    configs: dict[str, dict[str, Any]] = Field(default_factory=dict)
    stages: dict[str, StageRecord] = Field(default_factory=dict)

    @classmethod
    def load(cls, directory: str, tool_version: str) -> RunManifest:
        """The manifest stored in ``directory``, or an empty one."""
        path = os.path.join(directory, MANIFEST_FILENAME)
        if not os.path.exists(path):
            return cls(tool_version=tool_version)
        manifest = cls.model_validate(read_file(path))
        manifest.tool_version = tool_version
        logger.info("loaded run manifest with %d completed stages", len(manifest.stages))
        return manifest

    def save(self, directory: str) -> str:
        path = os.path.join(directory, MANIFEST_FILENAME)
        write_json(path, self.model_dump(mode="json"))
        return path

    def record(self, name: str) -> Optional[StageRecord]:
        return self.stages.get(name)

    def output_hashes(self) -> dict[str, dict[str, str]]:
        """Output hashes of every stage, without timings."""
        return {name: dict(record.outputs) for name, record in sorted(self.stages.items())}
