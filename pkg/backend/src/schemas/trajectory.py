"""
Simulated lander episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from backend.src.common.constants import CONTROL_DIM, STATE_DIM
from backend.src.common.enums import ParamsId, TerminationReason
from backend.src.common.known_exception import ShapeMismatchError


@dataclass
class Trajectory:
    """
    Variable-length episode sampled every ``dt`` seconds.

    Attributes:
        times: (T,) seconds, starting at 0.
        states: (T, 6) states x1..x6.
        controls: (T - 1, 3) clamped controls, one per integration step.
        wind: (2,) constant wind of the episode.
        params_id: Parameter set the episode was simulated with.
        terminated_by: Touchdown or timeout.
        rewards: (T - 1,) per-step rewards in the requested reward mode.
        success: Whether the terminal state lies inside the touchdown box.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    wind: np.ndarray
    params_id: ParamsId
    terminated_by: TerminationReason
    rewards: np.ndarray = field(default_factory=lambda: np.zeros(0))
    success: bool = False

    def __post_init__(self) -> None:
        steps = self.states.shape[0]
        if self.states.ndim != 2 or self.states.shape[1] != STATE_DIM:
            raise ShapeMismatchError("trajectory states", f"(T, {STATE_DIM})", self.states.shape)
        if self.controls.shape != (steps - 1, CONTROL_DIM):
            raise ShapeMismatchError(
                "trajectory controls", (steps - 1, CONTROL_DIM), self.controls.shape
            )
        if self.times.shape != (steps,):
            raise ShapeMismatchError("trajectory times", (steps,), self.times.shape)

    @property
    def duration(self) -> float:
        """Final time T_f in seconds."""
        return float(self.times[-1])

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.rewards))

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]
