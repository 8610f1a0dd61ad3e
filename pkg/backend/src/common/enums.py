"""
This module defines custom Enum classes.
"""

from __future__ import annotations

from enum import Enum


class LogLevel(Enum):
    """
    Enum for defining logging levels.

    Attributes:
        DEBUG (str): Debug logging level.
        INFO (str): Informational logging level.
        WARNING (str): Warning logging level.
        ERROR (str): Error logging level.
        CRITICAL (str): Critical logging level.
    """

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class ParamsId(str, Enum):
    """
    Vehicle parameter presets.

    Attributes:
        PA (str): True ("real-world") parameters, simulated with wind.
        PB (str): Estimated ("ideal") parameters, simulated without wind.
    """

    PA = "PA"
    PB = "PB"


class RewardMode(str, Enum):
    """
    Reward function variants.

    Attributes:
        PPO (str): Shaped reward used to train the online data-generation policies.
        BPPO (str): Unshaped reward used for offline training and evaluation.
    """

    PPO = "ppo"
    BPPO = "bppo"


class TerminationReason(str, Enum):
    """Reason an episode stopped."""

    TOUCHDOWN = "touchdown"
    TIMEOUT = "timeout"


class Domain(str, Enum):
    """
    Data domain of an observed pool: real-world (PA with wind) or ideal (PB).
    """

    REAL = "real"
    IDEAL = "ideal"


class Recipe(str, Enum):
    """
    Offline training-data recipes.
    """

    RL_25 = "RL-25"
    RL_HYBRID_25 = "RL-Hybrid-25"
    RL_1000 = "RL-1000"
    VAE_25 = "VAE-25"
    VAE_1000 = "VAE-1000"
    MI_VAE_25 = "MI-VAE-25"
    MI_VAE_1000 = "MI-VAE-1000"


class GeneratorKind(str, Enum):
    """Generative model used by a recipe, if any."""

    NONE = "none"
    SVAE = "svae"
    MIVAE = "mivae"


class LatentSource(str, Enum):
    """Where MI-VAE generation takes its latent codes from."""

    POSTERIOR = "posterior"
    PRIOR = "prior"


class DatasetFormat(str, Enum):
    """
    On-disk dataset formats.

    Both store float64 so that a reloaded table matches its manifest content hash.
    """

    CSV = "csv"
    PARQUET = "parquet"


class OutputHead(str, Enum):
    """Output layer interpretation of a dense network."""

    PLAIN = "plain"
    GAUSSIAN = "gaussian"
