"""
This file is used to configure pytest.
"""

import os
import tempfile
from pathlib import Path

import numpy as np
import pytest


os.environ["TEST_ENV"] = "True"

current_file = Path(__file__)
project_root = current_file.parent.parent.parent  # backend/tests/conftest.py -> repo root
config_path = project_root / "config-test.yaml"
os.environ["WORKBENCH_CONFIG_FILEPATH"] = str(config_path)
os.environ.setdefault(
    "WORKBENCH_TEST_OUTPUT", os.path.join(tempfile.gettempdir(), "lander-augment-tests")
)


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed-seed generator for tests that draw random inputs."""
    return np.random.default_rng(1234)


@pytest.fixture
def test_config_path() -> str:
    return str(config_path)
