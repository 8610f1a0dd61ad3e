"""
Planar lander equations of motion and their fixed-step Runge-Kutta integration.

States are float64 arrays (x1..x6): horizontal position, altitude, attitude,
air-relative horizontal and vertical velocity, angular rate. Controls are (u1, u2, u3)
in newtons and winds are (wx, wy) in m/s.
"""

from __future__ import annotations

import logging

import numpy as np

from backend.src.common.known_exception import IntegrationError, InvalidStateError
from backend.src.schemas.vehicle import VehicleParams

logger = logging.getLogger(__name__)


def clamp_control(control: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Clips u1 to [0, u1max] and the side thrusters to [-uimax, uimax]."""
    u_max = params.u_max_array
    lower = np.array([0.0, -u_max[1], -u_max[2]])
    return np.clip(np.asarray(control, dtype=np.float64), lower, u_max)


def derivative(
    state: np.ndarray,
    control: np.ndarray,
    wind: np.ndarray,
    params: VehicleParams,
) -> np.ndarray:
    """
    Right-hand side of the lander equations of motion.

    Args:
        state: (x1..x6).
        control: (u1, u2, u3), already clamped to the thrust limits.
        wind: (wx, wy).
        params: Vehicle constants.

    Returns:
        The 6-component state derivative.

    Raises:
        InvalidStateError: If any input is not finite.
    """
    if not (
        np.all(np.isfinite(state))
        and np.all(np.isfinite(control))
        and np.all(np.isfinite(wind))
    ):
        raise InvalidStateError(
            f"state: {np.asarray(state).tolist()}, control: {np.asarray(control).tolist()}"
        )

    _, _, x3, x4, x5, x6 = state
    u1, u2, u3 = control
    mass = params.mass
    drag = params.drag_coeff
    speed = np.sqrt(x4 * x4 + x5 * x5)
    sin3 = np.sin(x3)
    cos3 = np.cos(x3)
    side = u2 + u3

    return np.array(
        [
            x4 + wind[0],
            x5 + wind[1],
            x6,
            (-u1 * sin3 + side * cos3 - drag * x4 * speed) / mass,
            (-mass * params.gravity + u1 * cos3 + side * sin3 - drag * x5 * speed)
            / mass,
            3.0 * (u2 - u3) / (2.0 * mass * params.length),
        ]
    )


def rk4_step_interpolated(
    state: np.ndarray,
    control_start: np.ndarray,
    control_end: np.ndarray,
    wind: np.ndarray,
    params: VehicleParams,
    dt: float,
    step_index: int = 0,
) -> np.ndarray:
    """
    Classical RK4 step with the control linearly interpolated over the step.

    The control is evaluated at t, t + dt/2 and t + dt. Equal endpoints give a
    zero-order hold.

    Raises:
        IntegrationError: If an intermediate or the resulting state is not finite.
    """
    control_mid = 0.5 * (control_start + control_end)
    try:
        k1 = derivative(state, control_start, wind, params)
        k2 = derivative(state + 0.5 * dt * k1, control_mid, wind, params)
        k3 = derivative(state + 0.5 * dt * k2, control_mid, wind, params)
        k4 = derivative(state + dt * k3, control_end, wind, params)
    except InvalidStateError as e:
        raise IntegrationError(step_index, e.details) from e

    next_state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(next_state)):
        raise IntegrationError(step_index, "non-finite state after update")
    return next_state


def rk4_step(
    state: np.ndarray,
    control: np.ndarray,
    wind: np.ndarray,
    params: VehicleParams,
    dt: float,
    step_index: int = 0,
) -> np.ndarray:
    """
    Classical RK4 step with the control held constant over the step.

    Raises:
        IntegrationError: Carrying ``step_index`` if integration produces non-finite values.
    """
    control = np.asarray(control, dtype=np.float64)
    return rk4_step_interpolated(
        np.asarray(state, dtype=np.float64),
        control,
        control,
        np.asarray(wind, dtype=np.float64),
        params,
        dt,
        step_index,
    )
