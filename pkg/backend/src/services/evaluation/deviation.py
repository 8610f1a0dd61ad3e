"""
Physical consistency of datums: each stored trajectory is re-integrated from its first
node under its own wind and control sequence and compared node by node.
"""

from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np
import pandas as pd

from backend.src.common.constants import STATE_NAMES
from backend.src.common.known_exception import IntegrationError
from backend.src.schemas.reports import DeviationReport, StateDeviation, empty_deviation
from backend.src.schemas.vehicle import VehicleParams
from backend.src.services.datasets.dataset import Dataset
from backend.src.services.datasets.datum import DatumParts
from backend.src.services.lander.dynamics import clamp_control, rk4_step_interpolated

logger = logging.getLogger(__name__)


def reintegrate(parts: DatumParts, params: VehicleParams) -> np.ndarray:
    """
    Integrates from node 0 with RK4 at dt = T_f / 99, the control moving linearly from
    node k to node k + 1 over each step. Controls are clamped to the thrust limits.

    Returns:
        (100, 6) re-integrated states.

    Raises:
        IntegrationError: If the integration produces a non-finite state.
    """
    controls = clamp_control(parts.controls, params)
    dt = parts.dt
    states = np.empty_like(parts.states)
    states[0] = parts.states[0]
    for k in range(states.shape[0] - 1):
        states[k + 1] = rk4_step_interpolated(
            states[k], controls[k], controls[k + 1], parts.wind, params, dt, step_index=k
        )
    return states


def datum_deviation(parts: DatumParts, params: VehicleParams) -> np.ndarray:
    """Per-state mean absolute error over the nodes, shape (6,)."""
    return np.mean(np.abs(parts.states - reintegrate(parts, params)), axis=0)


def trajectory_deviation(dataset: Dataset, params: VehicleParams) -> DeviationReport:
    """
    Mean and standard deviation over datums of the per-state node-averaged MAE.

    Datums whose re-integration fails are excluded and counted.
    """
    start_time = time.time()
    deviations = []
    excluded = 0
    for index, parts in enumerate(dataset.datums()):
        if not np.isfinite(parts.duration) or parts.duration <= 0.0:
            logger.warning("datum %d of %s has duration %s", index, dataset.name, parts.duration)
            excluded += 1
            continue
        try:
            deviations.append(datum_deviation(parts, params))
        except IntegrationError as e:
            logger.warning("datum %d of %s excluded: %s", index, dataset.name, e.details)
            excluded += 1

    if not deviations:
        logger.error("no datum of %s could be re-integrated", dataset.name)
        return empty_deviation(dataset.name, excluded)

    stacked = np.vstack(deviations)
    means, stds = stacked.mean(axis=0), stacked.std(axis=0)
    logger.info(
        "deviation of %s: %d datums, %d excluded, in %.2f seconds",
        dataset.name,
        stacked.shape[0],
        excluded,
        time.time() - start_time,
    )
    return DeviationReport(
        dataset=dataset.name,
        states=[
            StateDeviation(state=name, mean=float(m), std=float(s))
            for name, m, s in zip(STATE_NAMES, means, stds)
        ],
        evaluated=stacked.shape[0],
        excluded=excluded,
    )


def trajectory_plot_frame(
    dataset: Dataset,
    params: VehicleParams,
    datums: Optional[int] = None,
) -> pd.DataFrame:
    """
    Stored and re-integrated trajectories of the first ``datums`` datums in long format.

    Columns: datum, t, state, value, source (``stored`` or ``reintegrated``). Datums
    that fail to integrate only contribute their stored rows.
    """
    count = len(dataset) if datums is None else min(datums, len(dataset))
    frames = []
    for index in range(count):
        parts = dataset.datum(index)
        sources = {"stored": parts.states}
        try:
            sources["reintegrated"] = reintegrate(parts, params)
        except IntegrationError:
            logger.warning("datum %d of %s has no re-integrated trace", index, dataset.name)
        for source, states in sources.items():
            frame = pd.DataFrame(states, columns=list(STATE_NAMES))
            frame["t"] = parts.times
            frame = frame.melt(id_vars="t", var_name="state", value_name="value")
            frame["source"] = source
            frame["datum"] = index
            frames.append(frame)
    columns = ["datum", "t", "state", "value", "source"]
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)[columns]
