"""
Lander environment: initial conditions, rewards, termination and episode simulation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from backend.src.common.constants import (
    ACTION_INVERSE_CLIP,
    CONTROL_DIM,
    TOUCHDOWN_ALTITUDE,
)
from backend.src.common.enums import ParamsId, RewardMode, TerminationReason
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import (
    InvalidActionError,
    UnknownModeError,
    ValidationError,
)
from backend.src.core.config_loader import EnvConfig
from backend.src.schemas.trajectory import Trajectory
from backend.src.schemas.vehicle import (
    RADIANS_TO_DEGREES,
    RewardConfig,
    StateBounds,
    VehicleParams,
)
from backend.src.services.lander.dynamics import clamp_control, rk4_step

logger = logging.getLogger(__name__)

ControlPolicy = Callable[[np.ndarray], np.ndarray]
"""Maps an observation (x1..x6, wx, wy) to a control (u1, u2, u3) in newtons."""


def observation(state: np.ndarray, wind: np.ndarray) -> np.ndarray:
    """Full-state observation (x1..x6, wx, wy)."""
    return np.concatenate([state, wind])


def sample_initial(
    bounds: StateBounds, rng: np.random.Generator, wind_enabled: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draws an initial state and the episode's constant wind.

    Each of the 8 components is drawn independently and uniformly inside its interval.
    With ``wind_enabled`` off the wind is still drawn (to keep the stream aligned) and
    then zeroed.

    Returns:
        (state, wind)
    """
    draw = rng.uniform(
        np.asarray(bounds.init_lower, dtype=np.float64),
        np.asarray(bounds.init_upper, dtype=np.float64),
    )
    state = draw[:6].copy()
    wind = draw[6:].copy() if wind_enabled else np.zeros(2)
    return state, wind


def shaping(state: np.ndarray, wind: np.ndarray, maxima: tuple[float, ...]) -> float:
    """
    Normalized shaping potential over x1..x3 and the ground-relative velocities.

    x6 does not contribute.
    """
    return float(
        state[0] / maxima[0]
        + state[1] / maxima[1]
        + state[2] / maxima[2]
        + (state[3] + wind[0]) / maxima[3]
        + (state[4] + wind[1]) / maxima[4]
    )


def _terminal_error(state: np.ndarray, wind: np.ndarray, weights: tuple[float, ...]) -> float:
    return (
        weights[0] * abs(state[0])
        + weights[1] * RADIANS_TO_DEGREES * abs(state[2])
        + weights[2] * abs(state[3] + wind[0])
        + weights[3] * abs(state[4] + wind[1])
    )


def reward(
    prev_shaping: Optional[float],
    state: np.ndarray,
    control: np.ndarray,
    wind: np.ndarray,
    mode: RewardMode | str,
    params: VehicleParams,
    reward_config: RewardConfig = RewardConfig(),
) -> float:
    """
    Per-step reward of the state reached after applying ``control``.

    The online mode adds a shaping increment to a normalized control penalty and a
    touchdown term; the offline mode drops the shaping and scales the penalty by a
    fixed constant. Control penalties use |u_i|.

    Raises:
        UnknownModeError: If ``mode`` is not a reward mode.
        ValidationError: If the online mode is requested without ``prev_shaping``.
    """
    try:
        reward_mode = RewardMode(mode)
    except ValueError as e:
        raise UnknownModeError(str(mode), [m.value for m in RewardMode]) from e

    abs_control = np.abs(np.asarray(control, dtype=np.float64))
    touchdown = state[1] < TOUCHDOWN_ALTITUDE

    if reward_mode is RewardMode.PPO:
        if prev_shaping is None:
            raise ValidationError(
                ErrorCode.VALIDATION_MISSING_PARAMETER, field_name="prev_shaping"
            )
        current = shaping(state, wind, reward_config.shaping_maxima)
        value = reward_config.shaping_coefficient * (current**2 - prev_shaping**2)
        value -= reward_config.control_penalty * float(
            np.sum(abs_control / params.u_max_array)
        )
        if touchdown:
            value += reward_config.terminal_bonus - _terminal_error(
                state, wind, reward_config.ppo_terminal_weights
            )
        return float(value)

    value = -reward_config.control_penalty * float(
        np.sum(abs_control) / reward_config.bppo_control_scale
    )
    if touchdown:
        value += reward_config.terminal_bonus - _terminal_error(
            state, wind, reward_config.bppo_terminal_weights
        )
    return float(value)


def terminal_and_success(
    state: np.ndarray,
    wind: np.ndarray,
    bounds: StateBounds,
    step_count: int,
    max_steps: int,
) -> tuple[bool, bool]:
    """
    Episode termination and touchdown success.

    Returns:
        (is_terminal, is_success); success requires termination by touchdown.
    """
    touchdown = bool(state[1] < TOUCHDOWN_ALTITUDE)
    is_terminal = touchdown or step_count >= max_steps
    if not touchdown:
        return is_terminal, False
    lower, upper = bounds.final_box(wind)
    inside = bool(np.all(state[:5] >= lower) and np.all(state[:5] <= upper))
    return True, inside


def action_to_control(action: np.ndarray, params: VehicleParams) -> np.ndarray:
    """
    Maps a pre-squash policy action to thrust.

    tanh squashes to [-1, 1]; u1 = (a1 + 1) / 2 * u1max and u2, u3 = a * umax.
    Accepts a single action or a (n, 3) batch.
    """
    squashed = np.tanh(np.asarray(action, dtype=np.float64))
    squashed[..., 0] = 0.5 * (squashed[..., 0] + 1.0)
    return squashed * params.u_max_array


def control_to_action(control: np.ndarray, params: VehicleParams) -> np.ndarray:
    """
    Inverse of ``action_to_control``; squashed values are clipped before atanh.

    Accepts a single control or a (n, 3) batch.
    """
    control = np.asarray(control, dtype=np.float64)
    u_max = params.u_max_array
    squashed = control / u_max
    squashed[..., 0] = 2.0 * squashed[..., 0] - 1.0
    squashed = np.clip(squashed, -ACTION_INVERSE_CLIP, ACTION_INVERSE_CLIP)
    return np.arctanh(squashed)


def simulate_episode(
    policy: ControlPolicy,
    init_state: np.ndarray,
    wind: np.ndarray,
    params: VehicleParams,
    max_steps: int,
    mode: RewardMode | str = RewardMode.BPPO,
    bounds: StateBounds = StateBounds(),
    reward_config: RewardConfig = RewardConfig(),
    params_id: ParamsId = ParamsId.PA,
) -> Trajectory:
    """
    Rolls ``policy`` out with zero-order-hold RK4 until touchdown or timeout.

    Raises:
        InvalidActionError: If the policy returns a non-finite control.
        IntegrationError: If the dynamics blow up.
    """
    state = np.asarray(init_state, dtype=np.float64).copy()
    wind = np.asarray(wind, dtype=np.float64)
    states = [state]
    controls: list[np.ndarray] = []
    rewards: list[float] = []
    prev_shaping = shaping(state, wind, reward_config.shaping_maxima)
    success = False

    for step in range(max_steps):
        raw_control = np.asarray(policy(observation(state, wind)), dtype=np.float64)
        if raw_control.shape != (CONTROL_DIM,) or not np.all(np.isfinite(raw_control)):
            raise InvalidActionError(step)
        control = clamp_control(raw_control, params)
        state = rk4_step(state, control, wind, params, params.dt, step_index=step)
        rewards.append(
            reward(prev_shaping, state, control, wind, mode, params, reward_config)
        )
        prev_shaping = shaping(state, wind, reward_config.shaping_maxima)
        states.append(state)
        controls.append(control)
        is_terminal, success = terminal_and_success(
            state, wind, bounds, step + 1, max_steps
        )
        if is_terminal:
            break

    steps = len(controls)
    terminated_by = (
        TerminationReason.TOUCHDOWN
        if states[-1][1] < TOUCHDOWN_ALTITUDE
        else TerminationReason.TIMEOUT
    )
    return Trajectory(
        times=np.arange(steps + 1) * params.dt,
        states=np.vstack(states),
        controls=np.vstack(controls) if controls else np.zeros((0, CONTROL_DIM)),
        wind=wind.copy(),
        params_id=ParamsId(params_id),
        terminated_by=terminated_by,
        rewards=np.asarray(rewards),
        success=success,
    )


@dataclass
class StepResult:
    """Outcome of one ``LanderEnv.step``."""

    observation: np.ndarray
    reward: float
    terminal: bool
    touchdown: bool
    success: bool
    control: np.ndarray


class LanderEnv:
    """
    Incremental stepping wrapper over the lander dynamics.

    Actions are pre-squash policy outputs; they are squashed and clamped to thrust
    limits before integration. Dynamics, rewards and termination match
    ``simulate_episode``.
    """

    def __init__(
        self,
        env_config: EnvConfig,
        mode: RewardMode = RewardMode.PPO,
        params_id: ParamsId = ParamsId.PA,
    ):
        self.config = env_config
        self.params = env_config.params
        self.mode = RewardMode(mode)
        self.params_id = ParamsId(params_id)
        self.state = np.zeros(6)
        self.wind = np.zeros(2)
        self.step_count = 0
        self._prev_shaping = 0.0

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """Samples a new initial condition and returns the first observation."""
        self.state, self.wind = sample_initial(
            self.config.bounds, rng, wind_enabled=self.config.wind_enabled
        )
        self.step_count = 0
        self._prev_shaping = shaping(
            self.state, self.wind, self.config.reward.shaping_maxima
        )
        return observation(self.state, self.wind)

    def step(self, action: np.ndarray) -> StepResult:
        """
        Applies a pre-squash action for one ``dt``.

        Raises:
            InvalidActionError: If the action is not finite.
        """
        action = np.asarray(action, dtype=np.float64)
        if not np.all(np.isfinite(action)):
            raise InvalidActionError(self.step_count)
        control = clamp_control(action_to_control(action, self.params), self.params)
        self.state = rk4_step(
            self.state,
            control,
            self.wind,
            self.params,
            self.params.dt,
            step_index=self.step_count,
        )
        self.step_count += 1
        step_reward = reward(
            self._prev_shaping,
            self.state,
            control,
            self.wind,
            self.mode,
            self.params,
            self.config.reward,
        )
        self._prev_shaping = shaping(
            self.state, self.wind, self.config.reward.shaping_maxima
        )
        is_terminal, success = terminal_and_success(
            self.state,
            self.wind,
            self.config.bounds,
            self.step_count,
            self.config.max_steps,
        )
        return StepResult(
            observation=observation(self.state, self.wind),
            reward=step_reward,
            terminal=is_terminal,
            touchdown=bool(self.state[1] < TOUCHDOWN_ALTITUDE),
            success=success,
            control=control,
        )
