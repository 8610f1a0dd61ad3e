"""
Evaluation report models.
"""

from __future__ import annotations

from typing import Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt

from backend.src.common.constants import STATE_NAMES

MOMENT_NAMES: tuple[str, ...] = ("mean", "variance", "skewness", "kurtosis")


class StateDeviation(BaseModel):
    """Mean and standard deviation over datums of one state's trajectory-averaged MAE."""

    model_config = ConfigDict(extra="forbid")

    state: str
    mean: NonNegativeFloat
    std: NonNegativeFloat


class DeviationReport(BaseModel):
    """
    Re-integration deviation of a dataset.

    Attributes:
        dataset: Name of the evaluated dataset.
        states: One entry per state x1..x6, in order.
        evaluated: Datums that integrated to the end.
        excluded: Datums whose re-integration blew up.
    """

    model_config = ConfigDict(extra="forbid")

    dataset: str
    states: list[StateDeviation]
    evaluated: NonNegativeInt
    excluded: NonNegativeInt = 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [entry.model_dump() for entry in self.states], columns=["state", "mean", "std"]
        )

    def by_state(self) -> dict[str, StateDeviation]:
        return {entry.state: entry for entry in self.states}


class MomentRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: str
    component: NonNegativeInt
    moment: str
    value: float


class MomentsReport(BaseModel):
    """
    Four moments of each dataset projected on the first three principal components of
    the observed training data.

    Attributes:
        reference: Name of the dataset the basis was fit on.
        centered: Whether the basis was fit on mean-centered features.
        singular_values: Leading singular values of the reference matrix.
        rows: One row per (dataset, component, moment), reference first.
    """

    model_config = ConfigDict(extra="forbid")

    reference: str
    centered: bool = False
    singular_values: list[float] = Field(default_factory=list)
    rows: list[MomentRow] = Field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [row.model_dump() for row in self.rows],
            columns=["dataset", "component", "moment", "value"],
        )

    def value(self, dataset: str, component: int, moment: str) -> float:
        for row in self.rows:
            if (row.dataset, row.component, row.moment) == (dataset, component, moment):
                return row.value
        raise KeyError((dataset, component, moment))


class PolicyMetrics(BaseModel):
    """
    Rollout statistics of one policy in the real-world environment.

    Control cost is dt * sum over steps and channels of |u|; final deviation is
    |x1| + max(0, x2 - 1) + |x3| + |x4 + wx| + |x5 + wy| at the last state.
    """

    model_config = ConfigDict(extra="forbid")

    label: str
    episodes: NonNegativeInt
    reward_mode: str
    mean_reward: float
    std_reward: NonNegativeFloat
    success_rate: float = Field(ge=0.0, le=100.0)
    control_cost_mean: NonNegativeFloat
    control_cost_std: NonNegativeFloat
    final_deviation_mean: NonNegativeFloat
    final_deviation_std: NonNegativeFloat
    seed: Optional[int] = None


class EvaluationReport(BaseModel):
    """Everything the evaluation stage of one recipe produces."""

    model_config = ConfigDict(extra="forbid")

    recipe: Optional[str] = None
    deviation: list[DeviationReport] = Field(default_factory=list)
    moments: Optional[MomentsReport] = None
    policies: list[PolicyMetrics] = Field(default_factory=list)


def empty_deviation(dataset: str, excluded: int) -> DeviationReport:
    """Report of a dataset none of whose datums could be re-integrated."""
    return DeviationReport(
        dataset=dataset,
        states=[StateDeviation(state=name, mean=0.0, std=0.0) for name in STATE_NAMES],
        evaluated=0,
        excluded=excluded,
    )
