"""
Unit tests for the command line entry point.
"""

import json
import os
import tempfile
import unittest
from unittest.mock import MagicMock, patch

from backend.src import main as cli
from backend.src.common.enums import ParamsId, Recipe
from backend.src.common.known_exception import StageError
from backend.src.pipeline.recipe_runner import RecipeResult


def succeeded(recipe: str = "RL-25") -> RecipeResult:
    return RecipeResult(success=True, recipe=recipe)


class TestMain(unittest.TestCase):
    """Exit codes, overrides and command dispatch."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmp.name, "out")

    def tearDown(self):
        self.tmp.cleanup()

    @patch("backend.src.main.run_recipes")
    def test_run_recipe_with_overrides(self, mock_run: MagicMock):
        mock_run.return_value = [succeeded()]
        code = cli.main(["run-recipe", "--recipe", "RL-25", "--seed", "11", "--out", self.out])
        self.assertEqual(code, cli.EXIT_OK)
        (configs,), kwargs = mock_run.call_args
        self.assertEqual(configs[0].recipe, Recipe.RL_25)
        self.assertEqual(configs[0].master_seed, 11)
        self.assertEqual(configs[0].output_dir, self.out)
        self.assertFalse(kwargs["resume"])
        with open(os.path.join(self.out, "RL-25.config.json"), encoding="utf-8") as handle:
            self.assertEqual(json.load(handle)["master_seed"], 11)

    @patch("backend.src.main.run_recipes")
    def test_all_recipes(self, mock_run: MagicMock):
        mock_run.return_value = [succeeded(r.value) for r in Recipe]
        code = cli.main(["run-recipe", "--recipe", "all", "--out", self.out])
        self.assertEqual(code, cli.EXIT_OK)
        (configs,), _ = mock_run.call_args
        self.assertEqual([c.recipe for c in configs], list(Recipe))
        self.assertEqual({c.output_dir for c in configs}, {self.out})
        for recipe in Recipe:
            self.assertTrue(os.path.exists(os.path.join(self.out, f"{recipe.value}.config.json")))

    @patch("backend.src.main.run_recipes")
    def test_evaluate_resumes(self, mock_run: MagicMock):
        mock_run.return_value = [succeeded()]
        cli.main(["evaluate", "--out", self.out])
        self.assertTrue(mock_run.call_args.kwargs["resume"])

    @patch("backend.src.main.run_recipes")
    def test_failed_recipe(self, mock_run: MagicMock):
        mock_run.return_value = [RecipeResult(success=False, recipe="RL-25", error_message="x")]
        self.assertEqual(cli.main(["run-recipe", "--out", self.out]), cli.EXIT_STAGE_FAILED)

    def test_invalid_configuration(self):
        path = os.path.join(self.tmp.name, "bad.json")
        with open(path, mode="w", encoding="utf-8") as handle:
            json.dump({"recipe": "RL-25", "unknown": 1}, handle)
        self.assertEqual(cli.main(["run-recipe", "--config", path]), cli.EXIT_VALIDATION)
        self.assertEqual(
            cli.main(["run-recipe", "--config", path + ".missing"]), cli.EXIT_VALIDATION
        )
        self.assertEqual(
            cli.main(["run-recipe", "--recipe", "GAN-25", "--out", self.out]),
            cli.EXIT_VALIDATION,
        )

    @patch("backend.src.main.RecipeRunner")
    def test_stage_command_dispatch(self, mock_runner_class: MagicMock):
        runner = mock_runner_class.return_value
        code = cli.main(["train-ppo", "--params", "PA", "--params", "PB", "--out", self.out])
        self.assertEqual(code, cli.EXIT_OK)
        runner.source_policy.assert_any_call(ParamsId.PA)
        runner.source_policy.assert_any_call(ParamsId.PB)

    @patch("backend.src.main.RecipeRunner")
    def test_generator_command_needs_a_matching_recipe(self, mock_runner_class: MagicMock):
        runner = mock_runner_class.return_value
        runner.config = cli.resolve_config(
            cli.build_parser().parse_args(["train-svae", "--recipe", "RL-25", "--out", self.out])
        )
        code = cli.main(["train-svae", "--recipe", "RL-25", "--out", self.out])
        self.assertEqual(code, cli.EXIT_VALIDATION)
        runner.generate.assert_not_called()

    @patch("backend.src.main.RecipeRunner")
    def test_stage_failure(self, mock_runner_class: MagicMock):
        mock_runner_class.return_value.source_policy.side_effect = StageError("ppo-PA", "boom")
        code = cli.main(["train-ppo", "--out", self.out])
        self.assertEqual(code, cli.EXIT_STAGE_FAILED)

    def test_without_config_or_recipe(self):
        args = cli.build_parser().parse_args(["run-recipe"])
        with patch("backend.src.main.get_settings") as mock_settings:
            mock_settings.return_value.WORKBENCH_CONFIG_FILEPATH = os.path.join(
                self.tmp.name, "absent.json"
            )
            with self.assertRaises(cli.MissingParametersError):
                cli.resolve_config(args)
