"""
Schemas describing the lander vehicle, its admissible states and its reward functions.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    NonNegativeFloat,
    PositiveFloat,
    model_validator,
)

from backend.src.common.constants import (
    FINAL_LOWER_BOUND,
    FINAL_TARGET,
    FINAL_UPPER_BOUND,
    INITIAL_LOWER_BOUND,
    INITIAL_UPPER_BOUND,
    SHAPING_MAXIMA,
    VEHICLE_PRESETS,
)
from backend.src.common.enums import ParamsId


class VehicleParams(BaseModel):
    """
    Physical constants of one vehicle parameter set, in SI units.

    Thrust limits (main, left, right) are in newtons.
    Gravity and drag may be zero so that drag-free and gravity-free oracles can be built.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    mass: PositiveFloat
    gravity: NonNegativeFloat
    length: PositiveFloat
    drag_coeff: NonNegativeFloat
    dt: PositiveFloat
    u_max: tuple[PositiveFloat, PositiveFloat, PositiveFloat]

    @classmethod
    def preset(cls, params_id: ParamsId) -> VehicleParams:
        """Returns the built-in parameter set for ``params_id``."""
        return cls(**VEHICLE_PRESETS[ParamsId(params_id)])

    @property
    def u_max_array(self) -> np.ndarray:
        return np.asarray(self.u_max, dtype=np.float64)

    @property
    def hover_thrust(self) -> float:
        """Main thrust that exactly cancels gravity."""
        return self.mass * self.gravity


class StateBounds(BaseModel):
    """
    Initial-condition sampling box and touchdown success box.

    The initial bounds cover (x1..x6, wx, wy). The final bounds cover x1..x5, where the
    x4 and x5 intervals are stored for zero wind and shifted by -wx and -wy at use.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    init_lower: tuple[float, ...] = INITIAL_LOWER_BOUND
    init_upper: tuple[float, ...] = INITIAL_UPPER_BOUND
    final_lower: tuple[float, ...] = FINAL_LOWER_BOUND
    final_upper: tuple[float, ...] = FINAL_UPPER_BOUND
    final_target: tuple[float, ...] = FINAL_TARGET

    @model_validator(mode="after")
    def check_ordering(self) -> StateBounds:
        """
        Validates lengths and lower <= upper for both boxes.

        Raises:
            ValueError: If a box is malformed or the target lies outside the final box.
        """
        if len(self.init_lower) != 8 or len(self.init_upper) != 8:
            raise ValueError("initial bounds must have 8 components")
        if len(self.final_lower) != 5 or len(self.final_upper) != 5:
            raise ValueError("final bounds must have 5 components")
        if any(lo > hi for lo, hi in zip(self.init_lower, self.init_upper)):
            raise ValueError("initial lower bound exceeds upper bound")
        if any(lo > hi for lo, hi in zip(self.final_lower, self.final_upper)):
            raise ValueError("final lower bound exceeds upper bound")
        if any(
            not lo <= t <= hi
            for lo, t, hi in zip(self.final_lower, self.final_target, self.final_upper)
        ):
            raise ValueError("final target lies outside the final bounds")
        return self

    def final_box(self, wind: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Wind-shifted final bounds over x1..x5."""
        shift = np.array([0.0, 0.0, 0.0, -wind[0], -wind[1]])
        lower = np.asarray(self.final_lower, dtype=np.float64) + shift
        upper = np.asarray(self.final_upper, dtype=np.float64) + shift
        return lower, upper


class RewardConfig(BaseModel):
    """
    Coefficients of the online (shaped) and offline (unshaped) reward functions.

    A negative ``shaping_coefficient`` flips the sign of the shaping increment.
    Terminal weights apply to (|x1|, |x3| in degrees, |x4 + wx|, |x5 + wy|).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    shaping_coefficient: float = 0.5
    shaping_maxima: tuple[PositiveFloat, ...] = SHAPING_MAXIMA
    terminal_bonus: float = 100.0
    control_penalty: float = 0.1
    ppo_terminal_weights: tuple[float, float, float, float] = (2.0, 1.0, 5.0, 10.0)
    bppo_terminal_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    bppo_control_scale: PositiveFloat = 1000.0

    @model_validator(mode="after")
    def check_maxima(self) -> RewardConfig:
        if len(self.shaping_maxima) != 5:
            raise ValueError("shaping_maxima must have 5 components")
        return self


RADIANS_TO_DEGREES = 180.0 / math.pi
