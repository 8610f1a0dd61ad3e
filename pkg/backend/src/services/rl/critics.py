"""
Scalar critics: state values V(x) and state-action values Q(x, u).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Optional

import numpy as np

from backend.src.common.constants import CONTROL_DIM, OBSERVATION_DIM
from backend.src.services.nn.network import (
    CompositeParams,
    NetworkParams,
    NetworkSpec,
    backward,
    init_params,
    mlp_forward,
)
from backend.src.services.rl.policy import scale_observations


@dataclass
class Critic(CompositeParams):
    """
    MLP critic. Observations are scaled; actions (pre-squash) enter unscaled.
    """

    param_fields: ClassVar[tuple[str, ...]] = ("net",)

    spec: NetworkSpec
    net: NetworkParams
    uses_action: bool = False

    @classmethod
    def value_net(
        cls, rng: np.random.Generator, hidden_sizes: tuple[int, ...] = (64, 64)
    ) -> Critic:
        spec = NetworkSpec(layer_widths=(OBSERVATION_DIM, *hidden_sizes, 1))
        return cls(spec=spec, net=init_params(spec, rng), uses_action=False)

    @classmethod
    def q_net(
        cls, rng: np.random.Generator, hidden_sizes: tuple[int, ...] = (256, 256)
    ) -> Critic:
        spec = NetworkSpec(layer_widths=(OBSERVATION_DIM + CONTROL_DIM, *hidden_sizes, 1))
        return cls(spec=spec, net=init_params(spec, rng), uses_action=True)

    def features(
        self, observations: np.ndarray, actions: Optional[np.ndarray] = None
    ) -> np.ndarray:
        scaled = scale_observations(observations)
        if self.uses_action:
            return np.concatenate([scaled, np.asarray(actions, dtype=np.float64)], axis=-1)
        return scaled

    def predict(
        self, observations: np.ndarray, actions: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Critic values with one entry per row."""
        output, _ = mlp_forward(self.net, self.spec, self.features(observations, actions))
        return output[..., 0]


def regression_loss(
    critic: Critic,
    observations: np.ndarray,
    targets: np.ndarray,
    actions: Optional[np.ndarray] = None,
) -> tuple[float, Critic]:
    """
    Mean squared error of the critic against ``targets`` and its gradient.

    Returns:
        (loss, gradients shaped like ``critic``)
    """
    output, record = mlp_forward(
        critic.net, critic.spec, critic.features(observations, actions)
    )
    residual = output[:, 0] - targets
    loss = float(np.mean(residual**2))
    grad_out = (2.0 / residual.size) * residual[:, None]
    net_grads, _ = backward(record, grad_out)
    return loss, Critic(spec=critic.spec, net=net_grads, uses_action=critic.uses_action)
