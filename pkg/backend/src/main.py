"""
Command line entry point of the workbench.

Exit codes: 0 on success, 2 on configuration or validation errors, 3 when a stage fails.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Callable, Optional

from backend.src.common.constants import WORKBENCH_LOGO
from backend.src.common.enums import GeneratorKind, ParamsId, Recipe
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import (
    ConfigurationError,
    ConfigValidationError,
    KnownException,
    MissingParametersError,
    ValidationError,
)
from backend.src.core.config_loader import (
    PipelineConfig,
    apply_overrides,
    dump_config,
    load_config,
    validate_config,
)
from backend.src.core.settings import get_settings
from backend.src.pipeline.recipe_runner import RecipeRunner, run_recipes
from backend.src.pipeline.recipes import recipe_plan

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STAGE_FAILED = 3
ALL_RECIPES = "all"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lander-augment",
        description="Sim-to-real data augmentation workbench for the planetary lander.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", help="JSON or YAML run configuration")
        sub.add_argument("--seed", type=int, help="master seed override")
        sub.add_argument("--out", help="output directory override")
        sub.add_argument("--recipe", help=f"recipe override, or '{ALL_RECIPES}' for run-recipe")
        sub.add_argument(
            "--resume", action="store_true", help="reuse stages whose manifest still matches"
        )
        return sub

    for name, help_text in (
        ("train-ppo", "train the online data-generation policies"),
        ("gen-data", "simulate an observed dataset with a trained policy"),
    ):
        sub = add(name, help_text)
        sub.add_argument(
            "--params",
            choices=[p.value for p in ParamsId],
            action="append",
            help="parameter set (repeatable; default PA)",
        )
    add("train-svae", "train the standard VAE of a VAE recipe and synthesize data")
    add("train-mivae", "train the split-latent VAE of an MI-VAE recipe and synthesize data")
    add("train-bc", "behavior cloning on the recipe's offline set")
    add("train-bppo", "behavior cloning and BPPO on the recipe's offline set")
    add("evaluate", "evaluate a recipe, reusing every current stage")
    add("run-recipe", "run the complete stage chain of a recipe")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """
    Loads the configuration file (or defaults) and applies the command line overrides.

    Raises:
        ConfigurationError: If the file is invalid or no recipe can be determined.
    """
    settings = get_settings()
    path = args.config or (
        settings.WORKBENCH_CONFIG_FILEPATH
        if os.path.exists(settings.WORKBENCH_CONFIG_FILEPATH)
        else None
    )
    recipe = None if args.recipe == ALL_RECIPES else args.recipe
    if path is None:
        if args.recipe is None:
            raise MissingParametersError(
                ErrorCode.CONFIG_MISSING_PARAMETERS, ["recipe (give --config or --recipe)"]
            )
        config = validate_config(
            {"recipe": recipe or Recipe.RL_25.value, "output_dir": settings.DEFAULT_OUTPUT_DIR}
        )
    else:
        config = load_config(path)
    return apply_overrides(
        config, {"recipe": recipe, "master_seed": args.seed, "output_dir": args.out}
    )


def _params_ids(args: argparse.Namespace) -> list[ParamsId]:
    return [ParamsId(p) for p in (args.params or [ParamsId.PA.value])]


def cmd_train_ppo(runner: RecipeRunner, args: argparse.Namespace) -> None:
    for params_id in _params_ids(args):
        runner.source_policy(params_id)


def cmd_gen_data(runner: RecipeRunner, args: argparse.Namespace) -> None:
    cfg = runner.config
    plan = recipe_plan(cfg.recipe)
    for params_id in _params_ids(args):
        count = (
            cfg.data.real_count or plan.real_count
            if params_id is ParamsId.PA
            else cfg.data.ideal_count
        )
        runner.source_dataset(params_id, count, runner.source_policy(params_id))


def _generator_command(kind: GeneratorKind) -> Callable[[RecipeRunner, argparse.Namespace], None]:
    def command(runner: RecipeRunner, _: argparse.Namespace) -> None:
        plan = recipe_plan(runner.config.recipe)
        if plan.generator is not kind:
            raise ConfigValidationError(
                ErrorCode.CONFIG_INVALID_VALUE,
                validation_errors=[f"recipe: {plan.label} does not train a {kind.value} model"],
            )
        _, real, ideal = runner.observed(plan)
        runner.generate(plan, real, ideal)

    return command


def _offline_inputs(runner: RecipeRunner):
    plan = recipe_plan(runner.config.recipe)
    _, real, ideal = runner.observed(plan)
    synthetic = (
        runner.generate(plan, real, ideal) if plan.generator is not GeneratorKind.NONE else None
    )
    return plan, runner.offline_set(plan, real, ideal, synthetic)


def cmd_train_bc(runner: RecipeRunner, _: argparse.Namespace) -> None:
    plan, dataset = _offline_inputs(runner)
    runner.behavior_clone_only(plan, dataset)


def cmd_train_bppo(runner: RecipeRunner, _: argparse.Namespace) -> None:
    plan, dataset = _offline_inputs(runner)
    runner.train_offline(plan, dataset)


STAGE_COMMANDS: dict[str, Callable[[RecipeRunner, argparse.Namespace], None]] = {
    "train-ppo": cmd_train_ppo,
    "gen-data": cmd_gen_data,
    "train-svae": _generator_command(GeneratorKind.SVAE),
    "train-mivae": _generator_command(GeneratorKind.MIVAE),
    "train-bc": cmd_train_bc,
    "train-bppo": cmd_train_bppo,
}


def _run_full(config: PipelineConfig, args: argparse.Namespace) -> int:
    if args.recipe == ALL_RECIPES:
        configs = [config.model_copy(update={"recipe": recipe}) for recipe in Recipe]
    else:
        configs = [config]
    for recipe_config in configs:
        dump_config(
            recipe_config,
            os.path.join(recipe_config.output_dir, f"{recipe_config.recipe.value}.config.json"),
        )
    resume = args.resume or args.command == "evaluate"
    results = run_recipes(configs, resume=resume)
    for result in results:
        if not result.success:
            logger.error("recipe %s failed: %s", result.recipe, result.error_message)
            return EXIT_STAGE_FAILED
        logger.info(
            "recipe %s finished in %.2f seconds (%d stages run, %d reused)",
            result.recipe,
            result.execution_time,
            len(result.stages_run),
            len(result.stages_reused),
        )
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    """
    Main entry point of the workbench command line.

    Returns:
        The process exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        logger.info(WORKBENCH_LOGO)
        if args.command in STAGE_COMMANDS:
            dump_config(
                config, os.path.join(config.output_dir, f"{config.recipe.value}.config.json")
            )
            runner = RecipeRunner(config, resume=args.resume)
            STAGE_COMMANDS[args.command](runner, args)
            logger.info("%s completed", args.command)
            return EXIT_OK
        return _run_full(config, args)

    except (ConfigurationError, ValidationError) as e:
        logger.error("invalid configuration: %s", e.formatted_string)
        return EXIT_VALIDATION
    except KnownException as e:
        logger.error("%s failed: %s", args.command, e.formatted_string)
        return EXIT_STAGE_FAILED
    except KeyboardInterrupt:
        logger.info("stopped by user")
        return EXIT_STAGE_FAILED


if __name__ == "__main__":
    sys.exit(main())
