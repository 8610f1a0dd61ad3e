"""
Gaussian policy over pre-squash actions and its episode runner.

The mean network reads the observation divided by a fixed per-component scale. The
standard deviation is state independent. Log-probabilities are taken in pre-squash
action space; the tanh Jacobian is omitted because it does not depend on the policy
parameters for a given pre-squash action.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import ClassVar, Optional

import numpy as np

from backend.src.common.constants import (
    CONTROL_DIM,
    LOG_STD_BOUNDS,
    OBSERVATION_DIM,
    OBSERVATION_SCALE,
)
from backend.src.common.enums import ParamsId, RewardMode
from backend.src.core.config_loader import EnvConfig
from backend.src.schemas.trajectory import Trajectory
from backend.src.services.lander.env import (
    ControlPolicy,
    action_to_control,
    sample_initial,
    simulate_episode,
)
from backend.src.services.nn.gaussian import LOG_TWO_PI
from backend.src.services.nn.network import (
    CompositeParams,
    GradientRecord,
    NetworkParams,
    NetworkSpec,
    backward,
    init_params,
    mlp_forward,
)

logger = logging.getLogger(__name__)

_OBS_SCALE = np.asarray(OBSERVATION_SCALE, dtype=np.float64)


def scale_observations(observations: np.ndarray) -> np.ndarray:
    return np.asarray(observations, dtype=np.float64) / _OBS_SCALE


@dataclass
class GaussianPolicy(CompositeParams):
    """Mean network over scaled observations and a free log-std vector."""

    param_fields: ClassVar[tuple[str, ...]] = ("mean_net", "log_std")

    spec: NetworkSpec
    mean_net: NetworkParams
    log_std: np.ndarray

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        hidden_sizes: tuple[int, ...] = (64, 64),
        init_log_std: float = 0.0,
    ) -> GaussianPolicy:
        """Seeded policy with a small final layer so initial means start near zero."""
        spec = NetworkSpec(
            layer_widths=(OBSERVATION_DIM, *hidden_sizes, CONTROL_DIM), layer_norm=False
        )
        return cls(
            spec=spec,
            mean_net=init_params(spec, rng, output_scale=0.01),
            log_std=np.full(CONTROL_DIM, float(init_log_std)),
        )

    def clipped(self) -> GaussianPolicy:
        """Copy with log-std projected into its admissible interval."""
        return GaussianPolicy(
            spec=self.spec,
            mean_net=self.mean_net,
            log_std=np.clip(self.log_std, *LOG_STD_BOUNDS),
        )

    def mean(self, observations: np.ndarray) -> tuple[np.ndarray, GradientRecord]:
        return mlp_forward(self.mean_net, self.spec, scale_observations(observations))

    def sample(
        self, observation: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, float]:
        """Draws a pre-squash action and returns it with its log-probability."""
        mean, _ = self.mean(observation)
        std = np.exp(self.log_std)
        action = mean + std * rng.standard_normal(mean.shape)
        return action, float(gaussian_log_prob(action, mean, self.log_std))

    def entropy(self) -> float:
        return float(np.sum(self.log_std + 0.5 * (LOG_TWO_PI + 1.0)))


def gaussian_log_prob(
    actions: np.ndarray, mean: np.ndarray, log_std: np.ndarray
) -> np.ndarray:
    """Diagonal Gaussian log density with a shared log-std, summed over the last axis."""
    var = np.exp(2.0 * log_std)
    return -0.5 * np.sum((actions - mean) ** 2 / var + 2.0 * log_std + LOG_TWO_PI, axis=-1)


@dataclass
class LogProbTrace:
    """Values needed to backpropagate through ``policy_log_prob``."""

    record: GradientRecord
    mean: np.ndarray
    actions: np.ndarray
    log_std: np.ndarray


def policy_log_prob(
    policy: GaussianPolicy, observations: np.ndarray, actions: np.ndarray
) -> tuple[np.ndarray, LogProbTrace]:
    """Per-row log pi(action | observation) for a batch."""
    mean, record = policy.mean(observations)
    log_probs = gaussian_log_prob(actions, mean, policy.log_std)
    return log_probs, LogProbTrace(record, mean, np.asarray(actions), policy.log_std)


def policy_log_prob_backward(
    policy: GaussianPolicy,
    trace: LogProbTrace,
    grad_log_prob: np.ndarray,
    grad_entropy: float = 0.0,
) -> GaussianPolicy:
    """
    Gradients of sum_i grad_log_prob[i] * log pi_i + grad_entropy * H with respect to
    the policy parameters.
    """
    var = np.exp(2.0 * trace.log_std)
    diff = trace.actions - trace.mean
    weights = grad_log_prob[:, None]
    grad_mean = weights * diff / var
    grad_log_std = np.sum(weights * (diff**2 / var - 1.0), axis=0) + grad_entropy
    net_grads, _ = backward(trace.record, grad_mean)
    return GaussianPolicy(spec=policy.spec, mean_net=net_grads, log_std=grad_log_std)


def policy_controller(
    policy: GaussianPolicy,
    env_config: EnvConfig,
    rng: Optional[np.random.Generator] = None,
) -> ControlPolicy:
    """
    Wraps a policy as an observation-to-thrust map.

    Without ``rng`` the mean action is used.
    """
    params = env_config.params

    def control(observation: np.ndarray) -> np.ndarray:
        if rng is None:
            action, _ = policy.mean(observation)
        else:
            action, _ = policy.sample(observation, rng)
        return action_to_control(action, params)

    return control


def run_episodes(
    policy: GaussianPolicy,
    env_config: EnvConfig,
    episodes: int,
    rng: np.random.Generator,
    mode: RewardMode = RewardMode.BPPO,
    params_id: ParamsId = ParamsId.PA,
    deterministic: bool = True,
) -> list[Trajectory]:
    """
    Simulates ``episodes`` seeded episodes of ``policy`` in ``env_config``.

    Initial conditions and action noise come from ``rng`` in a fixed order.
    """
    controller = policy_controller(policy, env_config, None if deterministic else rng)
    trajectories = []
    for _ in range(episodes):
        init_state, wind = sample_initial(
            env_config.bounds, rng, wind_enabled=env_config.wind_enabled
        )
        trajectories.append(
            simulate_episode(
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
        )
    return trajectories
