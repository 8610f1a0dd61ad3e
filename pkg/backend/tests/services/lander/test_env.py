"""
Unit tests for the lander environment: rewards, termination, action mapping and rollouts.
"""

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from backend.src.common.enums import ParamsId, RewardMode, TerminationReason
from backend.src.common.known_exception import (
    InvalidActionError,
    UnknownModeError,
    ValidationError,
)
from backend.src.core.config_loader import EnvConfig
from backend.src.schemas.vehicle import RewardConfig, StateBounds, VehicleParams
from backend.src.services.lander.env import (
    LanderEnv,
    action_to_control,
    control_to_action,
    reward,
    sample_initial,
    shaping,
    simulate_episode,
    terminal_and_success,
)

PA = VehicleParams.preset(ParamsId.PA)
NO_DRAG = PA.model_copy(update={"drag_coeff": 0.0})
BOUNDS = StateBounds()


def zero_policy(_: np.ndarray) -> np.ndarray:
    return np.zeros(3)


def hover_policy(_: np.ndarray) -> np.ndarray:
    return np.array([PA.hover_thrust, 0.0, 0.0])


class TestReward(unittest.TestCase):
    """Reward functions."""

    def setUp(self):
        self.state = np.array([2.0, 50.0, 0.1, 1.0, -3.0, 0.0])
        self.wind = np.array([0.5, 0.2])
        self.control = np.array([1000.0, -200.0, 100.0])

    def test_offline_reward_in_flight_is_control_penalty(self):
        value = reward(None, self.state, self.control, self.wind, RewardMode.BPPO, PA)
        self.assertAlmostEqual(value, -0.1 * 1300.0 / 1000.0)

    def test_online_reward_adds_shaping_increment(self):
        config = RewardConfig()
        prev = 0.3
        current = shaping(self.state, self.wind, config.shaping_maxima)
        expected = 0.5 * (current**2 - prev**2) - 0.1 * (1000 / 15000 + 200 / 2000 + 100 / 2000)
        value = reward(prev, self.state, self.control, self.wind, RewardMode.PPO, PA)
        self.assertAlmostEqual(value, expected, places=12)

    def test_touchdown_adds_terminal_term(self):
        state = np.array([1.0, 0.5, math.radians(2.0), 0.5, -1.0, 0.0])
        wind = np.array([0.0, 0.0])
        value = reward(None, state, np.zeros(3), wind, RewardMode.BPPO, PA)
        self.assertAlmostEqual(value, 100.0 - (1.0 + 2.0 + 0.5 + 1.0), places=9)

    def test_online_reward_requires_previous_shaping(self):
        with self.assertRaises(ValidationError):
            reward(None, self.state, self.control, self.wind, RewardMode.PPO, PA)

    def test_unknown_mode(self):
        with self.assertRaises(UnknownModeError):
            reward(0.0, self.state, self.control, self.wind, "sac", PA)

    def test_shaping_ignores_angular_rate(self):
        config = RewardConfig()
        spun = self.state.copy()
        spun[5] = 3.0
        self.assertEqual(
            shaping(self.state, self.wind, config.shaping_maxima),
            shaping(spun, self.wind, config.shaping_maxima),
        )


class TestTermination(unittest.TestCase):
    """Termination and success."""

    def test_success_box_shifts_with_wind(self):
        wind = np.array([2.0, 0.0])
        state = np.array([0.0, 0.5, 0.0, -2.0, -1.0, 0.0])
        self.assertEqual(terminal_and_success(state, wind, BOUNDS, 10, 100), (True, True))
        still = state.copy()
        still[3] = 0.0
        self.assertEqual(terminal_and_success(still, wind, BOUNDS, 10, 100), (True, True))
        fast = state.copy()
        fast[3] = 2.0
        self.assertEqual(terminal_and_success(fast, wind, BOUNDS, 10, 100), (True, False))

    def test_timeout_is_never_success(self):
        state = np.array([0.0, 30.0, 0.0, 0.0, 0.0, 0.0])
        self.assertEqual(terminal_and_success(state, np.zeros(2), BOUNDS, 100, 100), (True, False))
        self.assertEqual(terminal_and_success(state, np.zeros(2), BOUNDS, 99, 100), (False, False))


class TestActionMapping(unittest.TestCase):
    """Squashing between policy actions and thrust."""

    def test_zero_action_is_half_main_thrust(self):
        np.testing.assert_allclose(action_to_control(np.zeros(3), PA), [7500.0, 0.0, 0.0])

    def test_inverse_round_trip_inside_clip(self):
        controls = np.array([[7500.0, 100.0, -300.0], [1000.0, -1500.0, 1900.0]])
        np.testing.assert_allclose(
            action_to_control(control_to_action(controls, PA), PA), controls, rtol=1e-9
        )


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 3, elements=st.floats(-20.0, 20.0)))
def test_squashed_controls_are_feasible(action: np.ndarray) -> None:
    control = action_to_control(action, PA)
    assert 0.0 <= control[0] <= PA.u_max[0]
    assert np.all(np.abs(control[1:]) <= PA.u_max_array[1:])


class TestSimulateEpisode(unittest.TestCase):
    """Episode rollouts."""

    def test_free_fall_touchdown_time(self):
        init = np.array([0.0, 150.0, 0.0, 0.0, -10.0, 0.0])
        traj = simulate_episode(zero_policy, init, np.zeros(2), NO_DRAG, 2000)
        g = PA.gravity
        fall_time = (-10.0 + math.sqrt(100.0 + 2.0 * g * 149.0)) / g
        self.assertIs(traj.terminated_by, TerminationReason.TOUCHDOWN)
        self.assertLessEqual(abs(traj.duration - fall_time), PA.dt)
        self.assertEqual(traj.states.shape[0], traj.controls.shape[0] + 1)
        self.assertEqual(traj.rewards.shape[0], traj.controls.shape[0])

    def test_hover_never_touches_down(self):
        init = np.array([0.0, 150.0, 0.0, 0.0, 0.0, 0.0])
        traj = simulate_episode(hover_policy, init, np.zeros(2), PA, 200)
        self.assertIs(traj.terminated_by, TerminationReason.TIMEOUT)
        self.assertFalse(traj.success)
        self.assertEqual(traj.controls.shape[0], 200)

    def test_non_finite_control_is_rejected(self):
        init = np.array([0.0, 150.0, 0.0, 0.0, 0.0, 0.0])
        with self.assertRaises(InvalidActionError):
            simulate_episode(lambda _: np.array([np.nan, 0.0, 0.0]), init, np.zeros(2), PA, 10)

    def test_sampled_initial_conditions_lie_in_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            state, wind = sample_initial(BOUNDS, rng)
            draw = np.concatenate([state, wind])
            self.assertTrue(np.all(draw >= np.asarray(BOUNDS.init_lower)))
            self.assertTrue(np.all(draw <= np.asarray(BOUNDS.init_upper)))

    def test_ideal_environment_has_no_wind(self):
        _, wind = sample_initial(BOUNDS, np.random.default_rng(3), wind_enabled=False)
        np.testing.assert_array_equal(wind, np.zeros(2))


class TestLanderEnv(unittest.TestCase):
    """The stepping wrapper agrees with ``simulate_episode``."""

    def test_steps_match_episode_rollout(self):
        config = EnvConfig(params=PA, max_steps=40)
        env = LanderEnv(config, mode=RewardMode.PPO)
        obs = env.reset(np.random.default_rng(11))
        state0, wind = obs[:6].copy(), obs[6:].copy()
        action = np.array([0.3, -0.1, 0.2])
        rewards = []
        result = None
        for _ in range(config.max_steps):
            result = env.step(action)
            rewards.append(result.reward)
            if result.terminal:
                break

        control = action_to_control(action, PA)
        traj = simulate_episode(
            lambda _: control, state0, wind, PA, config.max_steps, mode=RewardMode.PPO
        )
        np.testing.assert_allclose(result.observation[:6], traj.final_state, rtol=1e-12)
        np.testing.assert_allclose(rewards, traj.rewards, rtol=1e-12)
