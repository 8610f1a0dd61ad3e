#!/usr/bin/env python3
"""
Recipe runner: trains the source policies, collects the observed datasets, trains the
generative model of the recipe, trains BC and BPPO on the recipe's offline set and
evaluates everything.

Every stage is recorded in the run manifest of the output directory with the hashes of
its inputs, configuration and outputs. With ``resume`` a stage whose record still
matches is loaded from disk instead of being run again; stages shared by several
recipes (source policies and observed datasets) are reused the same way.
"""

from __future__ import annotations

import logging
import os
import time
from typing import Any, Callable, Optional, Protocol, TypeVar, runtime_checkable

import numpy as np
import pandas as pd

from backend.src.common.enums import Domain, GeneratorKind, ParamsId, RewardMode
from backend.src.common.known_exception import KnownException, StageError
from backend.src.core.config_loader import (
    BppoConfig,
    DataGenConfig,
    EnvConfig,
    PipelineConfig,
    PpoConfig,
    VaeTrainConfig,
)
from backend.src.core.settings import get_settings
from backend.src.pipeline.recipes import OfflineSource, RecipePlan, recipe_plan
from backend.src.pipeline.seeds import derive_seed
from backend.src.schemas.reports import EvaluationReport
from backend.src.schemas.run_manifest import RunManifest, StageRecord, payload_hash
from backend.src.schemas.vehicle import VehicleParams
from backend.src.services.datasets.dataset import Dataset, merge
from backend.src.services.datasets.sources import generate_source_dataset
from backend.src.services.datasets.storage import (
    DatasetReaderFactory,
    DatasetWriterFactory,
    DefaultDatasetReaderFactory,
    DefaultDatasetWriterFactory,
    load_dataset,
    save_dataset,
)
from backend.src.services.evaluation.deviation import (
    trajectory_deviation,
    trajectory_plot_frame,
)
from backend.src.services.evaluation.moments import pca_moments
from backend.src.services.evaluation.report_writer import emit_report
from backend.src.services.evaluation.rollout_metrics import rollout_metrics
from backend.src.services.generative.mivae import (
    MiVaeTrainResult,
    mivae_generate,
    train_mivae,
)
from backend.src.services.generative.svae import SvaeTrainResult, svae_generate, train_svae
from backend.src.services.nn.checkpoint import load_checkpoint, save_checkpoint
from backend.src.services.rl.offline import (
    BcResult,
    BppoResult,
    behavior_clone,
    evaluate_policy,
    to_transitions,
    train_bppo,
)
from backend.src.services.rl.policy import GaussianPolicy
from backend.src.services.rl.ppo import PpoResult, train_ppo
from backend.src.utils.helpers import ensure_dir, file_hash, write_json

logger = logging.getLogger(__name__)

T = TypeVar("T")

SHARED_DIR = "shared"
EVALUATION_SEED_LABEL = "evaluation-episodes"


@runtime_checkable
class TrainingBackend(Protocol):
    """Protocol for the training and data collection steps the runner delegates to."""

    def train_policy(
        self, params_id: ParamsId, env_config: EnvConfig, config: PpoConfig, seed: int
    ) -> PpoResult:
        """Train an online data-generation policy."""

    def collect_dataset(
        self,
        policy: GaussianPolicy,
        env_config: EnvConfig,
        params_id: ParamsId,
        count: int,
        seed: int,
        name: str,
        config: DataGenConfig,
    ) -> Dataset:
        """Simulate a source dataset with a trained policy."""

    def train_svae(self, data: Dataset, config: VaeTrainConfig, seed: int) -> SvaeTrainResult:
        """Train the standard VAE."""

    def train_mivae(
        self, real: Dataset, ideal: Dataset, config: VaeTrainConfig, seed: int
    ) -> MiVaeTrainResult:
        """Train the split-latent VAE."""

    def train_bc(
        self, dataset: Dataset, env_config: EnvConfig, config: BppoConfig, seed: int
    ) -> BcResult:
        """Behavior cloning alone."""

    def train_offline(
        self,
        dataset: Dataset,
        env_config: EnvConfig,
        config: BppoConfig,
        seed: int,
        params: VehicleParams,
    ) -> BppoResult:
        """Behavior cloning followed by BPPO."""


class DefaultTrainingBackend:
    """Default backend running the real trainers."""

    def __init__(self, progress_interval: int = 10):
        self.progress_interval = progress_interval

    def train_policy(
        self, params_id: ParamsId, env_config: EnvConfig, config: PpoConfig, seed: int
    ) -> PpoResult:
        return train_ppo(params_id, env_config, config, seed, self.progress_interval)

    def collect_dataset(
        self,
        policy: GaussianPolicy,
        env_config: EnvConfig,
        params_id: ParamsId,
        count: int,
        seed: int,
        name: str,
        config: DataGenConfig,
    ) -> Dataset:
        return generate_source_dataset(
            policy,
            env_config,
            params_id,
            count,
            seed,
            name,
            only_successful=config.only_successful,
            max_attempts_factor=config.max_attempts_factor,
            deterministic=config.deterministic_policy,
        )

    def train_svae(self, data: Dataset, config: VaeTrainConfig, seed: int) -> SvaeTrainResult:
        return train_svae(data, config, seed, progress_interval=self.progress_interval)

    def train_mivae(
        self, real: Dataset, ideal: Dataset, config: VaeTrainConfig, seed: int
    ) -> MiVaeTrainResult:
        return train_mivae(real, ideal, config, seed, progress_interval=self.progress_interval)

    def train_bc(
        self, dataset: Dataset, env_config: EnvConfig, config: BppoConfig, seed: int
    ) -> BcResult:
        transitions = to_transitions(dataset, env_config.params, env_config.reward)
        return behavior_clone(transitions, config, seed, self.progress_interval)

    def train_offline(
        self,
        dataset: Dataset,
        env_config: EnvConfig,
        config: BppoConfig,
        seed: int,
        params: VehicleParams,
    ) -> BppoResult:
        return train_bppo(
            dataset, env_config, config, seed, params, progress_interval=self.progress_interval
        )


class RecipeResult:
    """Container for recipe execution results."""

    def __init__(
        self,
        success: bool,
        recipe: str = "",
        stages_run: Optional[list[str]] = None,
        stages_reused: Optional[list[str]] = None,
        execution_time: float = 0.0,
        error_message: str = "",
        report_paths: Optional[dict[str, str]] = None,
    ):
        self.success: bool = success
        self.recipe: str = recipe
        self.stages_run: list[str] = stages_run or []
        self.stages_reused: list[str] = stages_reused or []
        self.execution_time: float = execution_time
        self.error_message: str = error_message
        self.report_paths: dict[str, str] = report_paths or {}


def _model_payload(*models: Any) -> list[Any]:
    return [m.model_dump(mode="json") if hasattr(m, "model_dump") else m for m in models]


class RecipeRunner:
    """
    Runs the stage chain of one recipe into an output directory.

    Stage values computed in this process are cached, so that a runner driving several
    recipes in a row trains the shared source policies and datasets once.
    """

    def __init__(
        self,
        config: PipelineConfig,
        resume: bool = False,
        backend: TrainingBackend | None = None,
        reader_factory: DatasetReaderFactory | None = None,
        writer_factory: DatasetWriterFactory | None = None,
    ):
        """
        Initialize the runner.

        Args:
            config: Resolved configuration of the recipe.
            resume: Reuse completed stages whose manifest records still match.
            backend: Trainers the stages delegate to (optional).
            reader_factory: Factory for dataset readers (optional).
            writer_factory: Factory for dataset writers (optional).
        """
        self.config: PipelineConfig = config
        self.resume: bool = resume
        self.backend: TrainingBackend = backend or DefaultTrainingBackend(
            get_settings().PROGRESS_LOG_INTERVAL
        )
        self.reader_factory: DatasetReaderFactory = reader_factory or DefaultDatasetReaderFactory()
        self.writer_factory: DatasetWriterFactory = writer_factory or DefaultDatasetWriterFactory()
        self.tool_version: str = get_settings().TOOL_VERSION
        self.output_dir: str = ensure_dir(config.output_dir)
        self.manifest: RunManifest = RunManifest.load(self.output_dir, self.tool_version)
        self._cache: dict[str, Any] = {}
        self._stages_run: list[str] = []
        self._stages_reused: list[str] = []

        logger.info("recipe runner initialized in %s", self.output_dir)

    def use_config(self, config: PipelineConfig) -> None:
        """Switches to another recipe of the same output directory, keeping the cache."""
        self.config = config

    def run(self) -> RecipeResult:
        """
        Execute the stage chain of the configured recipe.

        Returns:
            RecipeResult; on failure the manifest keeps every stage completed so far.
        """
        start_time = time.time()
        recipe = self.config.recipe.value
        self._stages_run, self._stages_reused = [], []
        try:
            logger.info("starting recipe %s (master seed %d)", recipe, self.config.master_seed)
            self.manifest.configs[recipe] = self.config.model_dump(mode="json")
            self.manifest.save(self.output_dir)
            report_paths = self._run_plan(recipe_plan(self.config.recipe))
            execution_time = time.time() - start_time
            logger.info(
                "recipe %s completed in %.2f seconds: %d stages run, %d reused",
                recipe,
                execution_time,
                len(self._stages_run),
                len(self._stages_reused),
            )
            return RecipeResult(
                success=True,
                recipe=recipe,
                stages_run=list(self._stages_run),
                stages_reused=list(self._stages_reused),
                execution_time=execution_time,
                report_paths=report_paths,
            )

        except KnownException as e:
            error_msg = f"known error during recipe execution: {e.formatted_string}"
            logger.error(error_msg)
            return self._failure(recipe, start_time, error_msg)

        except Exception as e:
            error_msg = f"unexpected error during recipe execution: {str(e)}"
            logger.exception(error_msg)
            return self._failure(recipe, start_time, error_msg)

    def _failure(self, recipe: str, start_time: float, error_msg: str) -> RecipeResult:
        return RecipeResult(
            success=False,
            recipe=recipe,
            stages_run=list(self._stages_run),
            stages_reused=list(self._stages_reused),
            execution_time=time.time() - start_time,
            error_message=error_msg,
        )

    def observed(
        self, plan: RecipePlan
    ) -> tuple[GaussianPolicy, Dataset, Optional[Dataset]]:
        """Source PA policy, the real pool and, when the recipe needs it, the ideal pool."""
        cfg = self.config
        real_count = cfg.data.real_count or plan.real_count
        source_policy = self.source_policy(ParamsId.PA)
        real = self.source_dataset(ParamsId.PA, real_count, source_policy)
        ideal = None
        if plan.uses_ideal:
            ideal = self.source_dataset(
                ParamsId.PB, cfg.data.ideal_count, self.source_policy(ParamsId.PB)
            )
        return source_policy, real, ideal

    def offline_set(
        self,
        plan: RecipePlan,
        real: Dataset,
        ideal: Optional[Dataset],
        synthetic: Optional[Dataset],
    ) -> Dataset:
        """Training set of the offline stage: real pool, real plus ideal, or synthetic."""
        if plan.offline_source is OfflineSource.HYBRID:
            return merge(f"hybrid-{plan.label}", [real, ideal], plan.label)
        if plan.offline_source is OfflineSource.SYNTHETIC:
            return synthetic
        return real

    def _run_plan(self, plan: RecipePlan) -> dict[str, str]:
        cfg = self.config
        source_policy, real, ideal = self.observed(plan)

        synthetic = None
        if plan.generator is not GeneratorKind.NONE:
            if not cfg.stages.train_generator:
                logger.warning("generator stage disabled; %s stops after data", plan.label)
                return {}
            synthetic = self.generate(plan, real, ideal)

        offline = None
        if cfg.stages.train_offline:
            offline = self.train_offline(plan, self.offline_set(plan, real, ideal, synthetic))

        if not cfg.stages.evaluate:
            return {}
        return self.evaluate(plan, real, synthetic, source_policy, offline)

    # Stage bookkeeping

    def _relative(self, path: str) -> str:
        return os.path.relpath(path, self.output_dir)

    def _absolute(self, relative: str) -> str:
        return os.path.join(self.output_dir, relative)

    def _is_current(self, record: Optional[StageRecord], expected: StageRecord) -> bool:
        if record is None:
            return False
        if (record.seed, record.config_hash, record.inputs) != (
            expected.seed,
            expected.config_hash,
            expected.inputs,
        ):
            return False
        for relative, digest in record.outputs.items():
            path = self._absolute(relative)
            if not os.path.exists(path) or file_hash(path) != digest:
                logger.warning("output %s of stage %s changed on disk", relative, record.name)
                return False
        return True

    def _stage(
        self,
        name: str,
        config_slice: Any,
        inputs: list[str],
        produce: Callable[[int], T],
        persist: Callable[[T], list[str]],
        load: Callable[[], T],
    ) -> T:
        """
        Runs, reloads or returns the cached value of a stage.

        Args:
            name: Stage label; the stage seed is derived from it.
            config_slice: Configuration the stage depends on.
            inputs: Names of the upstream stages.
            produce: Computes the stage value from the stage seed.
            persist: Writes the value and returns its data-bearing files.
            load: Rebuilds the value from the files of a current record.

        Raises:
            StageError: If the stage fails; completed stages stay in the manifest.
        """
        if name in self._cache:
            return self._cache[name]
        seed = derive_seed(self.config.master_seed, name)
        expected = StageRecord(
            name=name,
            seed=seed,
            config_hash=payload_hash(config_slice),
            inputs={upstream: self.manifest.stages[upstream].digest() for upstream in inputs},
            tool_version=self.tool_version,
        )

        if self.resume and self._is_current(self.manifest.record(name), expected):
            logger.info("stage %s is current, loading its outputs", name)
            try:
                value = load()
            except KnownException as e:
                raise StageError(name, f"reload failed: {e.formatted_string}") from e
            self._stages_reused.append(name)
            self._cache[name] = value
            return value

        stage_start = time.time()
        logger.info("starting stage %s", name)
        try:
            value = produce(seed)
            paths = persist(value)
        except StageError:
            raise
        except KnownException as e:
            logger.error("stage %s failed: %s", name, e.formatted_string)
            raise StageError(name, e.formatted_string) from e
        except Exception as e:
            logger.exception("stage %s failed unexpectedly", name)
            raise StageError(name, str(e)) from e

        expected.outputs = {self._relative(p): file_hash(p) for p in paths}
        expected.duration_seconds = time.time() - stage_start
        self.manifest.stages[name] = expected
        self.manifest.save(self.output_dir)
        self._stages_run.append(name)
        self._cache[name] = value
        logger.info("stage %s completed in %.2f seconds", name, expected.duration_seconds)
        return value

    def _save_dataset(self, dataset: Dataset, directory: str) -> str:
        return save_dataset(dataset, directory, self.config.dataset_format, self.writer_factory)

    def _load_dataset(self, name: str, directory: str) -> Dataset:
        return load_dataset(name, directory, self.config.dataset_format, self.reader_factory)

    def _write_log(self, log: pd.DataFrame, path: str) -> str:
        ensure_dir(os.path.dirname(path))
        log.to_csv(path, index=False)
        return path

    def _policy_template(self, hidden_sizes: tuple[int, ...]) -> GaussianPolicy:
        return GaussianPolicy.create(np.random.default_rng(0), hidden_sizes)

    # Stages

    def source_policy(self, params_id: ParamsId) -> GaussianPolicy:
        """Online PPO policy of ``params_id``, trained in its own environment."""
        cfg = self.config
        name = f"ppo-{params_id.value}"
        env_config = cfg.env_config(params_id)
        base = os.path.join(self.output_dir, SHARED_DIR, "policies", name)

        def produce(seed: int) -> GaussianPolicy:
            result = self.backend.train_policy(params_id, env_config, cfg.ppo, seed)
            save_checkpoint(
                base,
                result.policy,
                kind="gaussian-policy",
                specs={"mean_net": result.policy.spec.model_dump(mode="json")},
                seed=seed,
                extra={
                    "params_id": params_id.value,
                    "best_eval_return": result.best_eval_return,
                    "best_eval_success": result.best_eval_success,
                },
            )
            self._write_log(result.log, f"{base}.log.csv")
            return result.policy

        def persist(_: GaussianPolicy) -> list[str]:
            return [f"{base}.bin", f"{base}.log.csv"]

        def load() -> GaussianPolicy:
            policy, _ = load_checkpoint(base, self._policy_template(cfg.ppo.hidden_sizes))
            return policy

        return self._stage(
            name, _model_payload(cfg.ppo, env_config), [], produce, persist, load
        )

    def source_dataset(
        self, params_id: ParamsId, count: int, policy: GaussianPolicy
    ) -> Dataset:
        """Observed dataset of ``count`` episodes of the ``params_id`` source policy."""
        cfg = self.config
        name = f"data-{params_id.value}-{count}"
        env_config = cfg.env_config(params_id)
        directory = os.path.join(self.output_dir, SHARED_DIR, "datasets")
        role = Domain.REAL if params_id is ParamsId.PA else Domain.IDEAL
        dataset_name = f"{role.value}-{params_id.value}-{count}"

        def produce(seed: int) -> Dataset:
            return self.backend.collect_dataset(
                policy, env_config, params_id, count, seed, dataset_name, cfg.data
            )

        def persist(dataset: Dataset) -> list[str]:
            return [self._save_dataset(dataset, directory)]

        return self._stage(
            name,
            _model_payload(cfg.data, env_config, cfg.dataset_format.value),
            [f"ppo-{params_id.value}"],
            produce,
            persist,
            lambda: self._load_dataset(dataset_name, directory),
        )

    def generate(self, plan: RecipePlan, real: Dataset, ideal: Optional[Dataset]) -> Dataset:
        """Trains the recipe's generator on the observed data and synthesizes a dataset."""
        cfg = self.config
        name = f"{plan.label}/generator"
        directory = os.path.join(self.output_dir, plan.label, "generator")
        dataset_dir = os.path.join(self.output_dir, plan.label, "datasets")
        dataset_name = f"synthetic-{plan.label}"
        count = cfg.generation.synthetic_count
        inputs = [f"data-PA-{len(real)}"]
        if plan.generator is GeneratorKind.MIVAE:
            inputs.append(f"data-PB-{len(ideal)}")
        written: list[str] = []

        def produce(seed: int) -> Dataset:
            sample_seed = derive_seed(cfg.master_seed, f"{name}/sample")
            base = os.path.join(directory, plan.generator.value)
            if plan.generator is GeneratorKind.SVAE:
                result = self.backend.train_svae(real, cfg.vae, seed)
                save_checkpoint(base, result.model, "svae", result.model.specs(), seed)
                result.stats.save(f"{base}.stats.json")
                synthetic = svae_generate(
                    result.model,
                    result.stats,
                    count,
                    sample_seed,
                    dict(real.manifest.params),
                    name=dataset_name,
                    recipe=plan.label,
                    sources=[real.manifest.as_source()],
                )
            else:
                result = self.backend.train_mivae(real, ideal, cfg.vae, seed)
                save_checkpoint(
                    base,
                    result.model,
                    "mivae",
                    result.model.specs(),
                    seed,
                    extra={"ema": result.ema.to_dict()},
                )
                result.real_stats.save(f"{base}.real-stats.json")
                result.ideal_stats.save(f"{base}.ideal-stats.json")
                synthetic = mivae_generate(
                    result.model,
                    real,
                    ideal,
                    result.real_stats,
                    result.ideal_stats,
                    count,
                    sample_seed,
                    cfg.generation.latent_source,
                    name=dataset_name,
                    recipe=plan.label,
                )
            written[:] = [f"{base}.bin", self._write_log(result.log, f"{base}.log.csv")]
            return synthetic

        def persist(dataset: Dataset) -> list[str]:
            return [*written, self._save_dataset(dataset, dataset_dir)]

        return self._stage(
            name,
            _model_payload(cfg.vae, cfg.generation, plan.generator.value),
            inputs,
            produce,
            persist,
            lambda: self._load_dataset(dataset_name, dataset_dir),
        )

    def train_offline(
        self, plan: RecipePlan, dataset: Dataset
    ) -> tuple[GaussianPolicy, GaussianPolicy]:
        """BC then BPPO on the recipe's offline set; returns (bc policy, bppo policy)."""
        cfg = self.config
        name = f"{plan.label}/offline"
        env_config = cfg.env_config(ParamsId.PA)
        directory = os.path.join(self.output_dir, plan.label, "offline")
        inputs = [
            upstream
            for upstream in (
                f"data-PA-{cfg.data.real_count or plan.real_count}",
                f"data-PB-{cfg.data.ideal_count}" if plan.uses_ideal else None,
                f"{plan.label}/generator" if plan.generator is not GeneratorKind.NONE else None,
            )
            if upstream is not None and upstream in self.manifest.stages
        ]
        written: list[str] = []

        def produce(seed: int) -> tuple[GaussianPolicy, GaussianPolicy]:
            result = self.backend.train_offline(
                dataset, env_config, cfg.offline, seed, env_config.params
            )
            for label, params in (
                ("bc", result.bc_policy),
                ("bppo", result.policy),
                ("q", result.q_net),
                ("v", result.v_net),
            ):
                base = os.path.join(directory, label)
                save_checkpoint(
                    base, params, label, {"spec": params.spec.model_dump(mode="json")}, seed
                )
                written.append(f"{base}.bin")
            written.append(self._write_log(result.log, os.path.join(directory, "log.csv")))
            write_json(
                os.path.join(directory, "summary.json"),
                {
                    "dataset": dataset.name,
                    "dataset_hash": dataset.content_hash(),
                    "transitions_hash": result.transitions_hash,
                    "bc_eval": vars(result.bc_eval),
                    "best_eval": vars(result.best_eval),
                },
            )
            if plan.offline_source is OfflineSource.HYBRID:
                written.append(self._save_dataset(dataset, directory))
            return result.bc_policy, result.policy

        def load() -> tuple[GaussianPolicy, GaussianPolicy]:
            template = self._policy_template(cfg.offline.policy_hidden_sizes)
            bc, _ = load_checkpoint(os.path.join(directory, "bc"), template)
            bppo, _ = load_checkpoint(os.path.join(directory, "bppo"), template)
            return bc, bppo

        return self._stage(
            name,
            _model_payload(cfg.offline, env_config, dataset.content_hash()),
            inputs,
            produce,
            lambda _: list(written),
            load,
        )

    def behavior_clone_only(self, plan: RecipePlan, dataset: Dataset) -> GaussianPolicy:
        """Behavior cloning on the recipe's offline set without the BPPO phase."""
        cfg = self.config
        name = f"{plan.label}/bc"
        env_config = cfg.env_config(ParamsId.PA)
        base = os.path.join(self.output_dir, plan.label, "bc", "bc")
        inputs = [
            upstream
            for upstream in (
                f"data-PA-{cfg.data.real_count or plan.real_count}",
                f"{plan.label}/generator" if plan.generator is not GeneratorKind.NONE else None,
            )
            if upstream is not None and upstream in self.manifest.stages
        ]

        def produce(seed: int) -> GaussianPolicy:
            result = self.backend.train_bc(dataset, env_config, cfg.offline, seed)
            outcome = evaluate_policy(
                result.policy,
                env_config,
                cfg.offline.eval_episodes,
                derive_seed(cfg.master_seed, EVALUATION_SEED_LABEL),
            )
            save_checkpoint(
                base,
                result.policy,
                "bc",
                {"spec": result.policy.spec.model_dump(mode="json")},
                seed,
                extra={
                    "dataset": dataset.name,
                    "best_loss": result.best_loss,
                    "eval_return": outcome.mean_return,
                    "eval_success": outcome.success_rate,
                },
            )
            self._write_log(result.log, f"{base}.log.csv")
            return result.policy

        def load() -> GaussianPolicy:
            template = self._policy_template(cfg.offline.policy_hidden_sizes)
            policy, _ = load_checkpoint(base, template)
            return policy

        return self._stage(
            name,
            _model_payload(cfg.offline, env_config, dataset.content_hash()),
            inputs,
            produce,
            lambda _: [f"{base}.bin", f"{base}.log.csv"],
            load,
        )

    def evaluate(
        self,
        plan: RecipePlan,
        real: Dataset,
        synthetic: Optional[Dataset],
        source_policy: GaussianPolicy,
        offline: Optional[tuple[GaussianPolicy, GaussianPolicy]],
    ) -> dict[str, str]:
        """Deviation, moments and rollout metrics, written as the recipe's report."""
        cfg = self.config
        name = f"{plan.label}/evaluate"
        directory = os.path.join(self.output_dir, plan.label, "report")
        env_config = cfg.env_config(ParamsId.PA)
        params = env_config.params
        inputs = [
            upstream
            for upstream in (
                f"ppo-{ParamsId.PA.value}",
                f"data-PA-{len(real)}",
                f"{plan.label}/generator" if synthetic is not None else None,
                f"{plan.label}/offline" if offline is not None else None,
            )
            if upstream is not None
        ]

        def produce(_: int) -> dict[str, str]:
            episodes = cfg.evaluation.eval_episodes
            eval_seed = derive_seed(cfg.master_seed, EVALUATION_SEED_LABEL)
            datasets = [real] + ([synthetic] if synthetic is not None else [])
            policies = [
                rollout_metrics(
                    source_policy, env_config, episodes, eval_seed, RewardMode.PPO, "dataset"
                )
            ]
            if offline is not None:
                bc, bppo = offline
                policies.append(
                    rollout_metrics(bc, env_config, episodes, eval_seed, RewardMode.BPPO, "bc")
                )
                policies.append(
                    rollout_metrics(bppo, env_config, episodes, eval_seed, RewardMode.BPPO, "bppo")
                )
            report = EvaluationReport(
                recipe=plan.label,
                deviation=[trajectory_deviation(d, params) for d in datasets],
                moments=pca_moments(
                    real, datasets[1:], centered=cfg.evaluation.centered_pca
                ),
                policies=policies,
            )
            trajectories = {
                d.name: trajectory_plot_frame(d, params, cfg.evaluation.plot_datums)
                for d in datasets
            }
            return emit_report(
                report,
                directory,
                trajectories=trajectories,
                datasets=[d.manifest for d in datasets],
                context={"tool_version": self.tool_version, "master_seed": cfg.master_seed},
            )

        def load() -> dict[str, str]:
            record = self.manifest.stages[name]
            return {
                os.path.splitext(os.path.basename(rel))[0]: self._absolute(rel)
                for rel in record.outputs
            }

        return self._stage(
            name,
            _model_payload(cfg.evaluation, env_config),
            inputs,
            produce,
            lambda paths: list(paths.values()),
            load,
        )


def run_recipes(
    configs: list[PipelineConfig],
    resume: bool = False,
    backend: TrainingBackend | None = None,
) -> list[RecipeResult]:
    """
    Runs several recipes into the output directory of the first configuration.

    Stops at the first failing recipe.
    """
    if not configs:
        return []
    runner = RecipeRunner(configs[0], resume=resume, backend=backend)
    results = []
    for config in configs:
        runner.use_config(config)
        result = runner.run()
        results.append(result)
        if not result.success:
            break
    return results
