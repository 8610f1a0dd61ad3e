"""
Rollout statistics of trained policies.
"""

from __future__ import annotations

import logging
import time

import numpy as np

from backend.src.common.constants import TOUCHDOWN_ALTITUDE
from backend.src.common.enums import ParamsId, RewardMode
from backend.src.core.config_loader import EnvConfig
from backend.src.schemas.reports import PolicyMetrics
from backend.src.schemas.trajectory import Trajectory
from backend.src.services.lander.env import ControlPolicy, sample_initial, simulate_episode
from backend.src.services.rl.policy import GaussianPolicy, policy_controller

logger = logging.getLogger(__name__)


def control_cost(trajectory: Trajectory, dt: float) -> float:
    """dt times the sum of |u| over every step and channel."""
    return float(dt * np.sum(np.abs(trajectory.controls)))


def final_deviation(trajectory: Trajectory) -> float:
    """|x1| + max(0, x2 - 1) + |x3| + |x4 + wx| + |x5 + wy| at the last state."""
    x = trajectory.final_state
    wx, wy = trajectory.wind
    return float(
        abs(x[0])
        + max(0.0, x[1] - TOUCHDOWN_ALTITUDE)
        + abs(x[2])
        + abs(x[3] + wx)
        + abs(x[4] + wy)
    )


def rollout_metrics(
    policy: GaussianPolicy | ControlPolicy,
    env_config: EnvConfig,
    episodes: int = 200,
    seed: int = 0,
    mode: RewardMode = RewardMode.BPPO,
    label: str = "policy",
    params_id: ParamsId = ParamsId.PA,
) -> PolicyMetrics:
    """
    Seeded episodes of ``policy`` in ``env_config``.

    Gaussian policies act with their mean action. Initial conditions come from
    ``default_rng(seed)`` so that every policy sees the same episodes.
    """
    start_time = time.time()
    controller = (
        policy_controller(policy, env_config) if isinstance(policy, GaussianPolicy) else policy
    )
    rng = np.random.default_rng(seed)
    rewards, successes, costs, deviations = [], [], [], []
    for _ in range(episodes):
        init_state, wind = sample_initial(
            env_config.bounds, rng, wind_enabled=env_config.wind_enabled
        )
        trajectory = simulate_episode(
            controller,
            init_state,
            wind,
            env_config.params,
            env_config.max_steps,
            mode=mode,
            bounds=env_config.bounds,
            reward_config=env_config.reward,
            params_id=params_id,
        )
        rewards.append(trajectory.total_reward)
        successes.append(trajectory.success)
        costs.append(control_cost(trajectory, env_config.params.dt))
        deviations.append(final_deviation(trajectory))

    metrics = PolicyMetrics(
        label=label,
        episodes=episodes,
        reward_mode=RewardMode(mode).value,
        mean_reward=float(np.mean(rewards)),
        std_reward=float(np.std(rewards)),
        success_rate=100.0 * float(np.mean(successes)),
        control_cost_mean=float(np.mean(costs)),
        control_cost_std=float(np.std(costs)),
        final_deviation_mean=float(np.mean(deviations)),
        final_deviation_std=float(np.std(deviations)),
        seed=seed,
    )
    logger.info(
        "%s: reward %.2f +- %.2f, success %.1f%% over %d episodes in %.2f seconds",
        label,
        metrics.mean_reward,
        metrics.std_reward,
        metrics.success_rate,
        episodes,
        time.time() - start_time,
    )
    return metrics
