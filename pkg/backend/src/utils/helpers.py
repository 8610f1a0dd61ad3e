"""
This module contains helper functions used in the project
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import pathlib
from json.decoder import JSONDecodeError
from typing import Any

import numpy as np
import yaml
from jinja2 import Template

from backend.src.common.known_exception import (
    FileReadError,
    FileWriteError,
    FileNotFoundError as CustomFileNotFoundError,
)

logger = logging.getLogger(__name__)


def read_file(path: str) -> Template | dict[str, Any]:
    """
    Reads the .j2, .yaml or .json files and returns jinja2.environment.Template object or a dict
    :param path: input file path
    :return: A Jinja2 template object if the file is a .j2 file, or a dictionary for .yaml or .json files.

    Raises:
        CustomFileNotFoundError: If the file is not found.
        FileReadError: If the file cannot be read or parsed.
    """
    try:
        with open(path, mode="r", encoding="utf-8") as in_file:
            file_extension = pathlib.Path(path).suffix
            if file_extension == ".j2":
                template_text = in_file.read()
                return Template(template_text)
            if file_extension in [".yml", ".yaml"]:
                return yaml.safe_load(in_file)
            if file_extension == ".json":
                return json.loads(in_file.read())

            raise FileReadError(
                str(path),
                details="File extension is not supported! Supported: .j2, .yml, .yaml, .json",
            )

    except FileNotFoundError as ex:
        logger.exception("File not found: %s", path)
        raise CustomFileNotFoundError(str(path)) from ex
    except (yaml.YAMLError, JSONDecodeError) as ex:
        logger.exception("Failed to parse file: %s", path)
        raise FileReadError(
            str(path),
            details=f"Failed to parse file content: {str(ex)}",
        ) from ex
    except FileReadError:
        raise
    except Exception as ex:
        logger.exception("Error reading file: %s", path)
        raise FileReadError(str(path), details=str(ex)) from ex


def write_json(path: str, payload: dict[str, Any] | list[Any]) -> None:
    """
    Writes a JSON document with sorted keys, creating parent directories.

    Raises:
        FileWriteError: If the file cannot be written.
    """
    try:
        ensure_dir(os.path.dirname(path))
        with open(path, mode="w", encoding="utf-8") as out_file:
            json.dump(payload, out_file, indent=2, sort_keys=True)
    except (OSError, TypeError) as ex:
        logger.exception("Error writing file: %s", path)
        raise FileWriteError(str(path), details=str(ex)) from ex


def ensure_dir(path: str) -> str:
    """Creates the directory if needed and returns it."""
    if path:
        os.makedirs(path, exist_ok=True)
    return path


def content_hash(array: np.ndarray) -> str:
    """
    SHA-256 of an array's float64 little-endian bytes, prefixed by its shape.

    Two arrays hash equal exactly when they hold the same values in the same shape.
    """
    values = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    digest = hashlib.sha256()
    digest.update(str(values.shape).encode("utf-8"))
    digest.update(values.tobytes())
    return digest.hexdigest()


def file_hash(path: str) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    try:
        with open(path, mode="rb") as in_file:
            for chunk in iter(lambda: in_file.read(1 << 20), b""):
                digest.update(chunk)
    except FileNotFoundError as ex:
        raise CustomFileNotFoundError(str(path)) from ex
    return digest.hexdigest()
