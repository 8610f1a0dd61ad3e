"""
Unit tests for the recipe table.
"""

import pytest

from backend.src.common.enums import GeneratorKind, Recipe
from backend.src.common.known_exception import StageError
from backend.src.core.config_loader import PipelineConfig
from backend.src.pipeline.recipes import RECIPES, OfflineSource, recipe_plan


@pytest.mark.parametrize(
    "recipe, real_count, generator, uses_ideal, source",
    [
        (Recipe.RL_25, 25, GeneratorKind.NONE, False, OfflineSource.REAL),
        (Recipe.RL_HYBRID_25, 25, GeneratorKind.NONE, True, OfflineSource.HYBRID),
        (Recipe.RL_1000, 1000, GeneratorKind.NONE, False, OfflineSource.REAL),
        (Recipe.VAE_25, 25, GeneratorKind.SVAE, False, OfflineSource.SYNTHETIC),
        (Recipe.VAE_1000, 1000, GeneratorKind.SVAE, False, OfflineSource.SYNTHETIC),
        (Recipe.MI_VAE_25, 25, GeneratorKind.MIVAE, True, OfflineSource.SYNTHETIC),
        (Recipe.MI_VAE_1000, 1000, GeneratorKind.MIVAE, True, OfflineSource.SYNTHETIC),
    ],
)
def test_recipe_plans(recipe, real_count, generator, uses_ideal, source) -> None:
    plan = recipe_plan(recipe.value)
    assert plan.recipe is recipe
    assert plan.real_count == real_count
    assert plan.generator is generator
    assert plan.uses_ideal is uses_ideal
    assert plan.offline_source is source
    assert plan.label == recipe.value


def test_every_recipe_has_a_plan() -> None:
    assert set(RECIPES) == set(Recipe)


def test_unknown_recipe() -> None:
    with pytest.raises(StageError):
        recipe_plan("GAN-25")


@pytest.mark.parametrize(
    "recipe, offline_count",
    [
        (Recipe.RL_25, 25),
        (Recipe.RL_HYBRID_25, 1025),
        (Recipe.RL_1000, 1000),
        (Recipe.VAE_25, 1000),
        (Recipe.MI_VAE_25, 1000),
        (Recipe.MI_VAE_1000, 1000),
    ],
)
def test_default_offline_set_sizes(recipe, offline_count) -> None:
    config = PipelineConfig(recipe=recipe)
    plan = recipe_plan(recipe)
    real = config.data.real_count or plan.real_count
    sizes = {
        OfflineSource.REAL: real,
        OfflineSource.HYBRID: real + config.data.ideal_count,
        OfflineSource.SYNTHETIC: config.generation.synthetic_count,
    }
    assert sizes[plan.offline_source] == offline_count
