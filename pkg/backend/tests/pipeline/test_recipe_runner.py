"""
Unit tests for the recipe runner: stage chain, manifest, resume and failure handling.
"""

import os
import tempfile
import unittest
from collections import Counter

import numpy as np
import pandas as pd
import pytest

from backend.src.common.enums import ParamsId, Recipe
from backend.src.common.known_exception import TrainingDivergenceError
from backend.src.core.config_loader import apply_overrides, load_config
from backend.src.pipeline.recipe_runner import (
    DefaultTrainingBackend,
    RecipeRunner,
    TrainingBackend,
    run_recipes,
)
from backend.src.schemas.run_manifest import MANIFEST_FILENAME, RunManifest
from backend.src.services.rl.critics import Critic
from backend.src.services.rl.policy import GaussianPolicy
from backend.src.services.rl.ppo import PpoResult
from backend.tests.factories import simulated_dataset

RL_STAGES = ["ppo-PA", "data-PA-4", "RL-25/offline", "RL-25/evaluate"]


class FakeBackend(DefaultTrainingBackend):
    """Untrained source policies and fixed-controller datasets; real offline training."""

    def __init__(self):
        super().__init__(progress_interval=1000)
        self.calls: Counter = Counter()

    def train_policy(self, params_id, env_config, config, seed):
        self.calls[f"train_policy:{params_id.value}"] += 1
        rng = np.random.default_rng(seed)
        return PpoResult(
            policy=GaussianPolicy.create(rng, config.hidden_sizes),
            value_net=Critic.value_net(rng, config.hidden_sizes),
            log=pd.DataFrame({"update": [0], "eval_return": [-1.0]}),
            best_eval_return=-1.0,
            best_eval_success=0.0,
        )

    def collect_dataset(self, policy, env_config, params_id, count, seed, name, config):
        self.calls[f"collect:{params_id.value}"] += 1
        return simulated_dataset(
            count=count, seed=seed, params_id=params_id, max_steps=env_config.max_steps, name=name
        )


class FailingOfflineBackend(FakeBackend):
    def train_offline(self, dataset, env_config, config, seed, params):
        raise TrainingDivergenceError("bppo", 1, "q_loss: nan")


def recipe_config(directory: str, recipe: Recipe = Recipe.RL_25, **overrides):
    config = load_config(os.environ["WORKBENCH_CONFIG_FILEPATH"])
    return apply_overrides(
        config, {"recipe": recipe.value, "output_dir": directory, **overrides}
    )


class TestRecipeRunner(unittest.TestCase):
    """Single-recipe runs with a fake backend."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.directory = os.path.join(self.tmp.name, "run")
        self.config = recipe_config(self.directory)

    def tearDown(self):
        self.tmp.cleanup()

    def test_fake_backend_satisfies_the_protocol(self):
        self.assertIsInstance(FakeBackend(), TrainingBackend)

    def test_stage_chain_and_manifest(self):
        result = RecipeRunner(self.config, backend=FakeBackend()).run()
        self.assertTrue(result.success, result.error_message)
        self.assertEqual(result.stages_run, RL_STAGES)
        self.assertEqual(result.stages_reused, [])
        self.assertTrue(os.path.isfile(result.report_paths["summary"]))

        manifest = RunManifest.load(self.directory, "test")
        self.assertEqual(set(manifest.stages), set(RL_STAGES))
        self.assertIn("RL-25", manifest.configs)
        self.assertEqual(
            manifest.stages["data-PA-4"].inputs,
            {"ppo-PA": manifest.stages["ppo-PA"].digest()},
        )
        self.assertTrue(
            os.path.isfile(os.path.join(self.directory, "shared", "policies", "ppo-PA.bin"))
        )

    def test_resume_reuses_every_current_stage(self):
        RecipeRunner(self.config, backend=FakeBackend()).run()
        backend = FakeBackend()
        result = RecipeRunner(self.config, resume=True, backend=backend).run()
        self.assertTrue(result.success, result.error_message)
        self.assertEqual(result.stages_run, [])
        self.assertEqual(result.stages_reused, RL_STAGES)
        self.assertEqual(sum(backend.calls.values()), 0)

    def test_resume_reruns_a_stage_whose_output_changed(self):
        RecipeRunner(self.config, backend=FakeBackend()).run()
        manifest = RunManifest.load(self.directory, "test")
        (dataset_path,) = manifest.stages["data-PA-4"].outputs
        with open(os.path.join(self.directory, dataset_path), mode="a", encoding="utf-8") as f:
            f.write("\n")

        result = RecipeRunner(self.config, resume=True, backend=FakeBackend()).run()
        self.assertIn("data-PA-4", result.stages_run)
        self.assertIn("ppo-PA", result.stages_reused)
        # the regenerated dataset is identical, so downstream records still match
        self.assertIn("RL-25/offline", result.stages_reused)

    def test_without_resume_everything_runs_again(self):
        RecipeRunner(self.config, backend=FakeBackend()).run()
        result = RecipeRunner(self.config, backend=FakeBackend()).run()
        self.assertEqual(result.stages_run, RL_STAGES)

    def test_same_seed_same_outputs(self):
        other = os.path.join(self.tmp.name, "other")
        RecipeRunner(self.config, backend=FakeBackend()).run()
        RecipeRunner(recipe_config(other), backend=FakeBackend()).run()
        first = RunManifest.load(self.directory, "test").output_hashes()
        second = RunManifest.load(other, "test").output_hashes()
        self.assertEqual(first, second)

    def test_master_seed_changes_the_data(self):
        other = os.path.join(self.tmp.name, "other")
        RecipeRunner(self.config, backend=FakeBackend()).run()
        RecipeRunner(recipe_config(other, master_seed=8), backend=FakeBackend()).run()
        first = RunManifest.load(self.directory, "test").stages["data-PA-4"]
        second = RunManifest.load(other, "test").stages["data-PA-4"]
        self.assertNotEqual(first.seed, second.seed)
        self.assertNotEqual(first.digest(), second.digest())

    def test_failure_keeps_completed_stages(self):
        result = RecipeRunner(self.config, backend=FailingOfflineBackend()).run()
        self.assertFalse(result.success)
        self.assertIn("RL-25/offline", result.error_message)
        self.assertEqual(result.stages_run, ["ppo-PA", "data-PA-4"])
        manifest = RunManifest.load(self.directory, "test")
        self.assertEqual(set(manifest.stages), {"ppo-PA", "data-PA-4"})

        resumed = RecipeRunner(self.config, resume=True, backend=FakeBackend()).run()
        self.assertTrue(resumed.success, resumed.error_message)
        self.assertEqual(resumed.stages_reused, ["ppo-PA", "data-PA-4"])

    def test_stage_toggles(self):
        config = self.config.model_copy(
            update={"stages": self.config.stages.model_copy(update={"evaluate": False})}
        )
        result = RecipeRunner(config, backend=FakeBackend()).run()
        self.assertTrue(result.success, result.error_message)
        self.assertEqual(result.stages_run, RL_STAGES[:3])
        self.assertEqual(result.report_paths, {})

    def test_hybrid_offline_set(self):
        config = recipe_config(self.directory, Recipe.RL_HYBRID_25)
        runner = RecipeRunner(config, backend=FakeBackend())
        result = runner.run()
        self.assertTrue(result.success, result.error_message)
        self.assertIn("data-PB-6", result.stages_run)
        offline = runner.manifest.stages["RL-Hybrid-25/offline"]
        self.assertTrue(any("hybrid-RL-Hybrid-25" in path for path in offline.outputs))


class TestRunRecipes(unittest.TestCase):
    """Several recipes into one output directory."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.directory = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_shared_stages_run_once(self):
        backend = FakeBackend()
        configs = [
            recipe_config(self.directory, Recipe.RL_25),
            recipe_config(self.directory, Recipe.RL_HYBRID_25),
        ]
        results = run_recipes(configs, backend=backend)
        self.assertTrue(all(r.success for r in results))
        self.assertEqual(backend.calls[f"train_policy:{ParamsId.PA.value}"], 1)
        self.assertEqual(backend.calls[f"collect:{ParamsId.PA.value}"], 1)
        self.assertNotIn("ppo-PA", results[1].stages_run)
        self.assertIn("ppo-PB", results[1].stages_run)
        manifest = RunManifest.load(self.directory, "test")
        self.assertEqual(set(manifest.configs), {"RL-25", "RL-Hybrid-25"})
        self.assertTrue(os.path.isfile(os.path.join(self.directory, MANIFEST_FILENAME)))

    def test_stops_at_the_first_failure(self):
        configs = [
            recipe_config(self.directory, Recipe.RL_25),
            recipe_config(self.directory, Recipe.RL_1000),
        ]
        results = run_recipes(configs, backend=FailingOfflineBackend())
        self.assertEqual(len(results), 1)
        self.assertFalse(results[0].success)

    def test_no_configs(self):
        self.assertEqual(run_recipes([]), [])


@pytest.mark.slow
def test_generator_recipes_end_to_end() -> None:
    with tempfile.TemporaryDirectory() as directory:
        configs = [
            recipe_config(directory, Recipe.VAE_25),
            recipe_config(directory, Recipe.MI_VAE_25),
        ]
        results = run_recipes(configs, backend=FakeBackend())
        assert all(r.success for r in results), [r.error_message for r in results]
        manifest = RunManifest.load(directory, "test")
        assert {"VAE-25/generator", "MI-VAE-25/generator"} <= set(manifest.stages)
        assert manifest.stages["MI-VAE-25/generator"].inputs.keys() == {"data-PA-4", "data-PB-6"}
        moments = pd.read_csv(results[1].report_paths["moments"])
        assert set(moments["dataset"]) == {"real-PA-4", "synthetic-MI-VAE-25"}
