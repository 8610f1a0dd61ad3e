"""
Observed training datasets simulated with a trained data-generation policy.
"""

from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np

from backend.src.common.enums import ParamsId, RewardMode
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import DatasetError
from backend.src.core.config_loader import EnvConfig
from backend.src.schemas.trajectory import Trajectory
from backend.src.services.datasets.dataset import Dataset, dataset_from_trajectories
from backend.src.services.lander.env import sample_initial, simulate_episode
from backend.src.services.rl.policy import GaussianPolicy, policy_controller

logger = logging.getLogger(__name__)


def generate_source_dataset(
    policy: GaussianPolicy,
    env_config: EnvConfig,
    params_id: ParamsId,
    count: int,
    seed: int,
    name: str,
    only_successful: bool = True,
    max_attempts_factor: int = 20,
    deterministic: bool = False,
    recipe: Optional[str] = None,
) -> Dataset:
    """
    Simulates episodes until ``count`` of them qualify for the dataset.

    With ``only_successful`` only touchdowns inside the final box qualify. Rejected
    episodes are counted in the manifest's ``attempts``.

    Raises:
        DatasetError: If ``count * max_attempts_factor`` episodes do not yield enough
            qualifying trajectories.
    """
    start_time = time.time()
    rng = np.random.default_rng(seed)
    controller = policy_controller(policy, env_config, None if deterministic else rng)
    trajectories: list[Trajectory] = []
    qualifying = 0
    max_attempts = count * max_attempts_factor

    while qualifying < count and len(trajectories) < max_attempts:
        init_state, wind = sample_initial(
            env_config.bounds, rng, wind_enabled=env_config.wind_enabled
        )
        trajectory = simulate_episode(
            controller,
            init_state,
            wind,
            env_config.params,
            env_config.max_steps,
            mode=RewardMode.BPPO,
            bounds=env_config.bounds,
            reward_config=env_config.reward,
            params_id=params_id,
        )
        trajectories.append(trajectory)
        if trajectory.success or not only_successful:
            qualifying += 1

    if qualifying < count:
        logger.error(
            "only %d of %d qualifying episodes after %d attempts", qualifying, count, max_attempts
        )
        raise DatasetError(
            ErrorCode.VALIDATION_SAMPLE_TOO_LARGE,
            "qualifying episodes",
            f"{qualifying} of {count} after {max_attempts} attempts",
        )

    dataset = dataset_from_trajectories(
        trajectories,
        params_id,
        env_config.params,
        name,
        recipe=recipe,
        seed=seed,
        only_successful=only_successful,
    )
    logger.info(
        "source dataset %s: %d datums, success rate %.3f, %.2f seconds",
        name,
        len(dataset),
        dataset.manifest.successes / len(trajectories),
        time.time() - start_time,
    )
    return dataset
