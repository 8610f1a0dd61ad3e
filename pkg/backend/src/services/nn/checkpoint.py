"""
Parameter checkpoints: a JSON manifest plus a little-endian float32 flat binary.

The binary holds every tensor in ``tensors()`` order (layer index, then weight, bias,
gain, offset), each flattened row-major.
"""

from __future__ import annotations

import hashlib
import logging
import os
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import (
    FileReadError,
    FileSystemError,
    FileWriteError,
    ShapeMismatchError,
)
from backend.src.services.nn.network import flatten, unflatten
from backend.src.services.nn.optim import ParameterSet
from backend.src.utils.helpers import ensure_dir, read_file, write_json

logger = logging.getLogger(__name__)

CHECKPOINT_DTYPE = "<f4"


class CheckpointManifest(BaseModel):
    """Sidecar describing a checkpoint binary."""

    model_config = ConfigDict(extra="forbid")

    kind: str
    specs: dict[str, Any] = Field(default_factory=dict)
    shapes: list[list[int]]
    count: int
    seed: int | None = None
    step: int = 0
    dtype: str = CHECKPOINT_DTYPE
    sha256: str
    extra: dict[str, Any] = Field(default_factory=dict)


def save_checkpoint(
    path: str,
    params: ParameterSet,
    kind: str,
    specs: dict[str, Any] | None = None,
    seed: int | None = None,
    step: int = 0,
    extra: dict[str, Any] | None = None,
) -> CheckpointManifest:
    """
    Writes ``<path>.bin`` and ``<path>.json``.

    Raises:
        FileWriteError: If either file cannot be written.
    """
    ensure_dir(os.path.dirname(path))
    payload = flatten(params).astype(CHECKPOINT_DTYPE).tobytes()
    manifest = CheckpointManifest(
        kind=kind,
        specs=specs or {},
        shapes=[list(t.shape) for t in params.tensors()],
        count=int(sum(t.size for t in params.tensors())),
        seed=seed,
        step=step,
        sha256=hashlib.sha256(payload).hexdigest(),
        extra=extra or {},
    )
    try:
        with open(f"{path}.bin", mode="wb") as out_file:
            out_file.write(payload)
    except OSError as e:
        logger.exception("Error writing checkpoint: %s", path)
        raise FileWriteError(f"{path}.bin", details=str(e)) from e
    write_json(f"{path}.json", manifest.model_dump(mode="json"))
    logger.debug("checkpoint %s written with %d parameters", path, manifest.count)
    return manifest


def load_manifest(path: str) -> CheckpointManifest:
    return CheckpointManifest.model_validate(read_file(f"{path}.json"))


def load_checkpoint(path: str, template: ParameterSet) -> tuple[Any, CheckpointManifest]:
    """
    Reads a checkpoint into the layout of ``template``.

    Returns:
        (parameters as float64, manifest)

    Raises:
        FileReadError: If the binary cannot be read.
        FileSystemError: If the binary does not match its recorded hash.
        ShapeMismatchError: If the stored shapes differ from the template.
    """
    manifest = load_manifest(path)
    expected = [list(t.shape) for t in template.tensors()]
    if manifest.shapes != expected:
        raise ShapeMismatchError("load checkpoint", expected, manifest.shapes)
    try:
        with open(f"{path}.bin", mode="rb") as in_file:
            payload = in_file.read()
    except OSError as e:
        raise FileReadError(f"{path}.bin", details=str(e)) from e
    if hashlib.sha256(payload).hexdigest() != manifest.sha256:
        raise FileSystemError(ErrorCode.FILE_HASH_MISMATCH, f"{path}.bin")
    vector = np.frombuffer(payload, dtype=manifest.dtype).astype(np.float64)
    return unflatten(template, vector), manifest
