"""
Fixed-length datum encoding of trajectories.

Layout of the 903 features: the states block (100 nodes x 6, time-major), the controls
block (100 nodes x 3, time-major), then wx, wy and the duration T_f in seconds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from backend.src.common.constants import (
    CONTROL_DIM,
    DATUM_CONTROLS_END,
    DATUM_DURATION_INDEX,
    DATUM_LENGTH,
    DATUM_NODES,
    DATUM_STATES_END,
    DATUM_WX_INDEX,
    DATUM_WY_INDEX,
    STATE_DIM,
)
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import DatasetError
from backend.src.schemas.trajectory import Trajectory

logger = logging.getLogger(__name__)


@dataclass
class DatumParts:
    """Decoded datum."""

    states: np.ndarray
    controls: np.ndarray
    wind: np.ndarray
    duration: float

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.states.shape[0])

    @property
    def dt(self) -> float:
        """Spacing of the uniform nodes."""
        return self.duration / (self.states.shape[0] - 1)


def _interpolate(times: np.ndarray, values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    return np.column_stack(
        [np.interp(nodes, times, values[:, channel]) for channel in range(values.shape[1])]
    )


def resample_fixed_length(
    trajectory: Trajectory, nodes: int = DATUM_NODES
) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Linearly interpolates states and controls onto ``nodes`` uniform times over [0, T_f].

    Controls are held over their step, so the last control is repeated at T_f before
    interpolating. Endpoints are reproduced exactly.

    Returns:
        (states (nodes, 6), controls (nodes, 3), T_f)

    Raises:
        DatasetError: If the trajectory has fewer than two samples.
    """
    times = np.asarray(trajectory.times, dtype=np.float64)
    if times.shape[0] < 2:
        raise DatasetError(
            ErrorCode.VALIDATION_INVALID_LENGTH, "trajectory samples", str(times.shape[0])
        )
    duration = float(times[-1])
    controls = np.vstack([trajectory.controls, trajectory.controls[-1:]])
    grid = np.linspace(0.0, duration, nodes)
    if times.shape[0] == nodes and np.array_equal(times, grid):
        return trajectory.states.astype(np.float64), controls.astype(np.float64), duration

    states = _interpolate(times, trajectory.states, grid)
    resampled_controls = _interpolate(times, controls, grid)
    states[0], states[-1] = trajectory.states[0], trajectory.states[-1]
    return states, resampled_controls, duration


def pack_datum(
    states: np.ndarray, controls: np.ndarray, wind: np.ndarray, duration: float
) -> np.ndarray:
    """
    Flattens resampled channels into a datum.

    Raises:
        DatasetError: If the blocks do not have the datum node count.
    """
    states = np.asarray(states, dtype=np.float64)
    controls = np.asarray(controls, dtype=np.float64)
    if states.shape != (DATUM_NODES, STATE_DIM) or controls.shape != (DATUM_NODES, CONTROL_DIM):
        raise DatasetError(
            ErrorCode.VALIDATION_INVALID_LENGTH,
            "datum blocks",
            f"states {states.shape}, controls {controls.shape}",
        )
    return np.concatenate(
        [states.ravel(), controls.ravel(), np.asarray(wind, dtype=np.float64), [duration]]
    )


def unpack_datum(datum: np.ndarray) -> DatumParts:
    """
    Inverse of ``pack_datum``.

    Raises:
        DatasetError: If the vector does not have the datum length.
    """
    datum = np.asarray(datum, dtype=np.float64)
    if datum.shape != (DATUM_LENGTH,):
        raise DatasetError(ErrorCode.VALIDATION_INVALID_LENGTH, "datum", str(datum.shape))
    return DatumParts(
        states=datum[:DATUM_STATES_END].reshape(DATUM_NODES, STATE_DIM),
        controls=datum[DATUM_STATES_END:DATUM_CONTROLS_END].reshape(DATUM_NODES, CONTROL_DIM),
        wind=datum[DATUM_WX_INDEX : DATUM_WY_INDEX + 1].copy(),
        duration=float(datum[DATUM_DURATION_INDEX]),
    )


def trajectory_to_datum(trajectory: Trajectory, nodes: int = DATUM_NODES) -> np.ndarray:
    """Resamples and packs one trajectory."""
    states, controls, duration = resample_fixed_length(trajectory, nodes)
    return pack_datum(states, controls, trajectory.wind, duration)


def clamp_durations(features: np.ndarray, min_duration: float) -> np.ndarray:
    """Copy of a (count, 903) matrix with every T_f raised to at least ``min_duration``."""
    clamped = np.array(features, dtype=np.float64)
    clamped[:, DATUM_DURATION_INDEX] = np.maximum(
        clamped[:, DATUM_DURATION_INDEX], min_duration
    )
    return clamped
