"""
Composition of the offline training set of every recipe.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from backend.src.common.constants import LARGE_REAL_COUNT, SMALL_REAL_COUNT
from backend.src.common.enums import GeneratorKind, Recipe
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import StageError


class OfflineSource(str, Enum):
    """Dataset the offline stage trains on."""

    REAL = "real"
    HYBRID = "hybrid"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class RecipePlan:
    """
    Attributes:
        recipe: Recipe name.
        real_count: Size of the real-world (PA, wind) pool.
        generator: Generative model trained on the pools, if any.
        uses_ideal: Whether the ideal (PB, no wind) pool is needed.
        offline_source: What BC and BPPO train on.
    """

    recipe: Recipe
    real_count: int
    generator: GeneratorKind
    uses_ideal: bool
    offline_source: OfflineSource

    @property
    def label(self) -> str:
        return self.recipe.value


RECIPES: dict[Recipe, RecipePlan] = {
    plan.recipe: plan
    for plan in (
        RecipePlan(Recipe.RL_25, SMALL_REAL_COUNT, GeneratorKind.NONE, False, OfflineSource.REAL),
        RecipePlan(
            Recipe.RL_HYBRID_25, SMALL_REAL_COUNT, GeneratorKind.NONE, True, OfflineSource.HYBRID
        ),
        RecipePlan(Recipe.RL_1000, LARGE_REAL_COUNT, GeneratorKind.NONE, False, OfflineSource.REAL),
        RecipePlan(
            Recipe.VAE_25, SMALL_REAL_COUNT, GeneratorKind.SVAE, False, OfflineSource.SYNTHETIC
        ),
        RecipePlan(
            Recipe.VAE_1000, LARGE_REAL_COUNT, GeneratorKind.SVAE, False, OfflineSource.SYNTHETIC
        ),
        RecipePlan(
            Recipe.MI_VAE_25, SMALL_REAL_COUNT, GeneratorKind.MIVAE, True, OfflineSource.SYNTHETIC
        ),
        RecipePlan(
            Recipe.MI_VAE_1000, LARGE_REAL_COUNT, GeneratorKind.MIVAE, True, OfflineSource.SYNTHETIC
        ),
    )
}


def recipe_plan(recipe: Recipe | str) -> RecipePlan:
    """
    Raises:
        StageError: If ``recipe`` is not a known recipe.
    """
    try:
        return RECIPES[Recipe(recipe)]
    except ValueError as e:
        raise StageError(
            "plan", f"recipe: {recipe}", error_code=ErrorCode.PIPELINE_UNKNOWN_RECIPE
        ) from e
