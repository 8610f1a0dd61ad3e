"""
Run configuration loader for the workbench.

This module defines the run configuration models and loads them from JSON or YAML files.
YAML files support environment variable substitution using the ${VAR_NAME} syntax.
Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import json
import logging
import os
import re
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    model_validator,
)

from backend.src.common.enums import (
    DatasetFormat,
    LatentSource,
    ParamsId,
    Recipe,
)
from backend.src.common.constants import (
    DEFAULT_MAX_STEPS,
    IDEAL_COUNT,
    SYNTHETIC_COUNT,
)
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import (
    ConfigFileError,
    ConfigValidationError,
)
from backend.src.schemas.vehicle import RewardConfig, StateBounds, VehicleParams
from backend.src.utils.helpers import write_json

logger = logging.getLogger(__name__)


class StrictModel(BaseModel):
    """Base for every run configuration section."""

    model_config = ConfigDict(extra="forbid")


class EnvConfig(StrictModel):
    """One lander environment: parameter set, wind switch, episode limit and rewards."""

    params: VehicleParams
    wind_enabled: bool = True
    max_steps: PositiveInt = DEFAULT_MAX_STEPS
    bounds: StateBounds = StateBounds()
    reward: RewardConfig = RewardConfig()


class PpoConfig(StrictModel):
    """Online PPO-clip hyperparameters."""

    gamma: float = Field(default=0.99, gt=0.0, le=1.0)
    gae_lambda: float = Field(default=0.95, gt=0.0, le=1.0)
    clip_epsilon: float = Field(default=0.2, gt=0.0, lt=1.0)
    epochs: PositiveInt = 10
    minibatch_size: PositiveInt = 64
    rollout_steps: PositiveInt = 2048
    total_updates: PositiveInt = 300
    entropy_coef: float = Field(default=0.0, ge=0.0)
    policy_lr: PositiveFloat = 3e-4
    value_lr: PositiveFloat = 1e-3
    hidden_sizes: tuple[PositiveInt, ...] = (64, 64)
    init_log_std: float = Field(default=0.0, ge=-5.0, le=2.0)
    max_grad_norm: PositiveFloat = 10.0
    eval_interval: PositiveInt = 10
    eval_episodes: PositiveInt = 50

    @model_validator(mode="after")
    def check_hidden(self) -> PpoConfig:
        if not self.hidden_sizes:
            raise ValueError("hidden_sizes needs at least one hidden layer")
        return self


class BppoConfig(StrictModel):
    """Offline stage hyperparameters: behavior cloning, Q/V fitting and BPPO."""

    gamma: float = Field(default=0.99, gt=0.0, le=1.0)
    clip_epsilon: float = Field(default=0.2, gt=0.0, lt=1.0)
    clip_decay: float = Field(default=1.0, gt=0.0, le=1.0)
    bc_epochs: PositiveInt = 500
    q_epochs: PositiveInt = 200
    v_epochs: PositiveInt = 200
    bppo_steps: PositiveInt = 1000
    eval_interval: PositiveInt = 50
    eval_episodes: PositiveInt = 20
    batch_size: PositiveInt = 256
    bc_lr: PositiveFloat = 1e-3
    q_lr: PositiveFloat = 1e-3
    v_lr: PositiveFloat = 1e-3
    bppo_lr: PositiveFloat = 1e-4
    policy_hidden_sizes: tuple[PositiveInt, ...] = (64, 64)
    critic_hidden_sizes: tuple[PositiveInt, ...] = (256, 256)
    holdout_fraction: float = Field(default=0.05, ge=0.0, lt=1.0)
    max_grad_norm: PositiveFloat = 10.0


class VaeTrainConfig(StrictModel):
    """
    S-VAE and MI-VAE architecture and training hyperparameters.

    ``hidden_layers`` counts the hidden layers of each encoder and each decoder.
    """

    latent_dim: PositiveInt = 32
    hidden_width: PositiveInt = 324
    hidden_layers: PositiveInt = 2
    layer_norm: bool = True
    kl_weight: float = Field(default=1.0, ge=0.0)
    lambda1: float = Field(default=1.0, ge=0.0)
    lambda2: float = Field(default=1.0, ge=0.0)
    lambda4: float = Field(default=1.0, ge=0.0)
    beta: float = Field(default=20.0, ge=0.0)
    warmup_epochs: int = Field(default=50, ge=0)
    learning_rate: PositiveFloat = 1e-3
    batch_size: PositiveInt = 32
    svae_epochs: PositiveInt = 2000
    mivae_epochs: PositiveInt = 1000
    ema_decay: float = Field(default=0.99, ge=0.0, lt=1.0)
    mi_ridge: PositiveFloat = 1e-6
    z2_prior_mean: float = 1.0
    z2_prior_var: PositiveFloat = 2.0

    @model_validator(mode="after")
    def check_warmup(self) -> VaeTrainConfig:
        if self.warmup_epochs > self.mivae_epochs:
            raise ValueError("warmup_epochs must not exceed mivae_epochs")
        return self


class GenerationConfig(StrictModel):
    """Synthetic dataset size and latent source."""

    synthetic_count: PositiveInt = SYNTHETIC_COUNT
    latent_source: LatentSource = LatentSource.POSTERIOR


class DataGenConfig(StrictModel):
    """Source dataset generation from the trained online policies."""

    # unset: the recipe decides (25 or 1000)
    real_count: Optional[PositiveInt] = None
    ideal_count: PositiveInt = IDEAL_COUNT
    only_successful: bool = True
    max_attempts_factor: PositiveInt = 20
    deterministic_policy: bool = False


class EvaluationConfig(StrictModel):
    """Evaluation settings."""

    eval_episodes: PositiveInt = 200
    centered_pca: bool = False
    plot_datums: int = Field(default=5, ge=0)


class StageToggles(StrictModel):
    """Switches for the optional stages of a recipe."""

    train_generator: bool = True
    train_offline: bool = True
    evaluate: bool = True


def _default_presets() -> dict[ParamsId, VehicleParams]:
    return {params_id: VehicleParams.preset(params_id) for params_id in ParamsId}


class PipelineConfig(StrictModel):
    """
    Complete, resolved configuration of one recipe run.

    ``dataset_format`` picks CSV or Parquet feature tables; Parquet keeps float64
    columns rather than float32, trading file size for bit-exact reloads.
    """

    recipe: Recipe
    master_seed: int = 0
    output_dir: str = "runs"
    dataset_format: DatasetFormat = DatasetFormat.CSV
    parameter_presets: dict[ParamsId, VehicleParams] = Field(
        default_factory=_default_presets
    )
    bounds: StateBounds = StateBounds()
    reward: RewardConfig = RewardConfig()
    max_steps: PositiveInt = DEFAULT_MAX_STEPS
    ppo: PpoConfig = PpoConfig()
    data: DataGenConfig = DataGenConfig()
    vae: VaeTrainConfig = VaeTrainConfig()
    generation: GenerationConfig = GenerationConfig()
    offline: BppoConfig = BppoConfig()
    evaluation: EvaluationConfig = EvaluationConfig()
    stages: StageToggles = StageToggles()

    @model_validator(mode="after")
    def complete_presets(self) -> PipelineConfig:
        """Fills presets that were not overridden with the built-in values."""
        for params_id in ParamsId:
            self.parameter_presets.setdefault(params_id, VehicleParams.preset(params_id))
        return self

    def env_config(self, params_id: ParamsId) -> EnvConfig:
        """
        Builds the environment of a parameter set.

        PA is the real-world environment (wind sampled per episode); PB is the ideal
        environment (wind fixed at zero).
        """
        return EnvConfig(
            params=self.parameter_presets[params_id],
            wind_enabled=params_id == ParamsId.PA,
            max_steps=self.max_steps,
            bounds=self.bounds,
            reward=self.reward,
        )


def env_constructor(loader: yaml.SafeLoader, node: yaml.ScalarNode) -> str:
    """
    YAML constructor for environment variable substitution.

    Supports ${VAR_NAME} syntax in YAML files.

    Args:
        loader: The YAML loader instance.
        node: The YAML node being processed.

    Returns:
        The processed string with environment variables substituted.
    """
    pattern = re.compile(r".*?\${(\w+)}.*?")
    value: str = loader.construct_scalar(node)
    matches: list[str] = pattern.findall(value)

    if matches:
        full_value = value
        for var in matches:
            env_value: str = os.environ.get(var, var)
            full_value = full_value.replace(f"${{{var}}}", env_value)
        return full_value

    return value


class _EnvLoader(yaml.SafeLoader):  # pylint: disable=too-many-ancestors
    """SafeLoader with the ``!env`` tag registered."""


_EnvLoader.add_constructor("!env", env_constructor)


def _parse_raw(path: Path) -> Any:
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yml", ".yaml"):
        try:
            return yaml.load(text, Loader=_EnvLoader)  # nosec B506
        except yaml.YAMLError as e:
            logger.error("YAML parsing error in %s: %s", path, str(e))
            raise ConfigFileError(ErrorCode.CONFIG_INVALID_YAML, file_path=str(path)) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        logger.error("JSON parsing error in %s: %s", path, str(e))
        raise ConfigFileError(ErrorCode.CONFIG_INVALID_JSON, file_path=str(path)) from e


def validate_config(raw_config: dict[str, Any]) -> PipelineConfig:
    """
    Validates a raw mapping into a PipelineConfig.

    Raises:
        ConfigValidationError: With one ``loc: msg`` entry per offending key.
    """
    try:
        return PipelineConfig.model_validate(raw_config)
    except ValidationError as e:
        validation_errors = [
            f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}"
            for err in e.errors()
        ]
        logger.error("Configuration validation failed: %s", validation_errors)
        raise ConfigValidationError(
            ErrorCode.CONFIG_VALIDATION_FAILED, validation_errors=validation_errors
        ) from e


def load_config(path: str | Path) -> PipelineConfig:
    """
    Load and validate a run configuration file.

    Args:
        path: JSON (default) or YAML configuration file.

    Returns:
        The validated configuration object.

    Raises:
        ConfigFileError: If the configuration file is missing, empty or unparseable.
        ConfigValidationError: If configuration validation fails.
    """
    config_path = Path(path)

    if not config_path.exists():
        logger.error("Configuration file not found: %s", config_path)
        raise ConfigFileError(ErrorCode.CONFIG_FILE_MISSING, file_path=str(config_path))

    raw_config = _parse_raw(config_path)

    if not raw_config or not isinstance(raw_config, dict):
        logger.error("Configuration file is empty or invalid: %s", config_path)
        raise ConfigFileError(ErrorCode.CONFIG_INVALID_FILE, file_path=str(config_path))

    pipeline_config = validate_config(raw_config)
    logger.info("configuration loaded successfully from: %s", config_path)
    return pipeline_config


def apply_overrides(
    pipeline_config: PipelineConfig, overrides: dict[str, Any]
) -> PipelineConfig:
    """
    Returns a re-validated copy with top-level keys replaced; ``None`` values are ignored.
    """
    payload = pipeline_config.model_dump(mode="json")
    payload.update({key: value for key, value in overrides.items() if value is not None})
    return validate_config(payload)


def dump_config(pipeline_config: PipelineConfig, path: str | Path) -> None:
    """Writes the resolved configuration as JSON."""
    write_json(str(path), pipeline_config.model_dump(mode="json"))
