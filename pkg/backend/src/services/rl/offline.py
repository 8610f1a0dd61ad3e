"""
Offline policy learning from fixed datasets: behavior cloning, SARSA Q fitting,
Monte-Carlo value fitting and behavior-proximal policy optimization (BPPO).

The environment is only used to evaluate policies; evaluation transitions never enter
the training set, which is checked through a content hash of the transitions.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
import pandas as pd

from backend.src.common.constants import LOG_RATIO_CLIP
from backend.src.common.enums import ParamsId, RewardMode
from backend.src.common.errors import ErrorCode
from backend.src.common.known_exception import (
    DatasetError,
    OfflineContractError,
    TrainingDivergenceError,
)
from backend.src.core.config_loader import BppoConfig, EnvConfig
from backend.src.schemas.vehicle import RewardConfig, VehicleParams
from backend.src.services.datasets.dataset import Dataset
from backend.src.services.lander.dynamics import clamp_control
from backend.src.services.lander.env import control_to_action, observation, reward
from backend.src.services.nn.optim import (
    AdamState,
    adam_init,
    adam_step,
    clip_by_global_norm,
)
from backend.src.services.rl.critics import Critic, regression_loss
from backend.src.services.rl.policy import (
    GaussianPolicy,
    policy_log_prob,
    policy_log_prob_backward,
    run_episodes,
)
from backend.src.services.rl.ppo import normalize_advantages, ppo_clip_objective
from backend.src.utils.helpers import content_hash

logger = logging.getLogger(__name__)


@dataclass
class TransitionDataset:
    """
    Flat transitions (x, a, x', r, a', done) with per-trajectory timestep.

    Actions are pre-squash policy actions recovered from the stored controls.
    """

    observations: np.ndarray
    actions: np.ndarray
    next_observations: np.ndarray
    next_actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    dts: np.ndarray
    trajectory_ids: np.ndarray
    source_hash: str = ""

    def __len__(self) -> int:
        return int(self.rewards.shape[0])

    def content_hash(self) -> str:
        return content_hash(
            np.column_stack(
                [
                    self.observations,
                    self.actions,
                    self.next_observations,
                    self.next_actions,
                    self.rewards,
                    self.dones.astype(np.float64),
                    self.dts,
                    self.trajectory_ids.astype(np.float64),
                ]
            )
        )


def to_transitions(
    dataset: Dataset,
    params: VehicleParams,
    reward_config: RewardConfig = RewardConfig(),
) -> TransitionDataset:
    """
    Turns every datum into 99 transitions between consecutive nodes.

    The timestep is T_f / 99; the reward is the offline-mode reward of the stored next
    state; the last transition of every datum is flagged done.

    Raises:
        DatasetError: If a datum has a non-positive duration.
    """
    observations, actions, next_observations, next_actions = [], [], [], []
    rewards, dones, dts, ids = [], [], [], []
    for index, parts in enumerate(dataset.datums()):
        if parts.duration <= 0.0:
            raise DatasetError(
                ErrorCode.VALIDATION_INVALID_PARAMETER, "datum duration", str(parts.duration)
            )
        steps = parts.states.shape[0] - 1
        controls = np.vstack([clamp_control(u, params) for u in parts.controls])
        datum_actions = control_to_action(controls, params)
        obs = np.vstack([observation(x, parts.wind) for x in parts.states])
        observations.append(obs[:-1])
        next_observations.append(obs[1:])
        actions.append(datum_actions[:-1])
        next_actions.append(datum_actions[1:])
        rewards.append(
            [
                reward(
                    None,
                    parts.states[k + 1],
                    controls[k],
                    parts.wind,
                    RewardMode.BPPO,
                    params,
                    reward_config,
                )
                for k in range(steps)
            ]
        )
        done = np.zeros(steps, dtype=bool)
        done[-1] = True
        dones.append(done)
        dts.append(np.full(steps, parts.dt))
        ids.append(np.full(steps, index))

    transitions = TransitionDataset(
        observations=np.vstack(observations),
        actions=np.vstack(actions),
        next_observations=np.vstack(next_observations),
        next_actions=np.vstack(next_actions),
        rewards=np.concatenate([np.asarray(r, dtype=np.float64) for r in rewards]),
        dones=np.concatenate(dones),
        dts=np.concatenate(dts),
        trajectory_ids=np.concatenate(ids),
        source_hash=dataset.content_hash(),
    )
    logger.info("dataset %s gives %d transitions", dataset.name, len(transitions))
    return transitions


def minibatches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Shuffled index batches covering ``range(n)`` once."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def discounted_returns(rewards: np.ndarray, dones: np.ndarray, gamma: float) -> np.ndarray:
    """Per-trajectory discounted return-to-go; ``dones`` marks trajectory tails."""
    returns = np.zeros_like(rewards, dtype=np.float64)
    running = 0.0
    for t in reversed(range(rewards.shape[0])):
        if dones[t]:
            running = 0.0
        running = rewards[t] + gamma * running
        returns[t] = running
    return returns


def _check_finite(trainer: str, step: int, **losses: float) -> None:
    if not all(np.isfinite(value) for value in losses.values()):
        details = ", ".join(f"{name}: {value}" for name, value in losses.items())
        raise TrainingDivergenceError(trainer, step, details)


@dataclass
class BcResult:
    policy: GaussianPolicy
    log: pd.DataFrame
    initial_loss: float
    best_loss: float


def bc_loss(
    policy: GaussianPolicy, observations: np.ndarray, actions: np.ndarray
) -> tuple[float, GaussianPolicy]:
    """Mean negative log-likelihood of the dataset actions and its gradient."""
    log_probs, trace = policy_log_prob(policy, observations, actions)
    n = log_probs.shape[0]
    grads = policy_log_prob_backward(policy, trace, np.full(n, -1.0 / n))
    return float(-np.mean(log_probs)), grads


def behavior_clone(
    transitions: TransitionDataset,
    config: BppoConfig,
    seed: int,
    progress_interval: int = 10,
) -> BcResult:
    """
    Maximum-likelihood imitation of the dataset actions.

    The returned policy has the lowest full-dataset loss seen at the end of an epoch,
    the initialization included.

    Raises:
        DatasetError: If the transition set is empty.
        TrainingDivergenceError: If the loss becomes non-finite.
    """
    if len(transitions) == 0:
        raise DatasetError(ErrorCode.VALIDATION_INVALID_LENGTH, "transitions", "0")
    rng = np.random.default_rng(seed)
    policy = GaussianPolicy.create(rng, config.policy_hidden_sizes)
    opt = adam_init(policy, config.bc_lr)
    obs, actions = transitions.observations, transitions.actions

    initial_loss, _ = bc_loss(policy, obs, actions)
    best_loss, best_policy = initial_loss, policy.copy()
    rows = [{"phase": "bc", "step": 0, "bc_loss": initial_loss}]
    for epoch in range(1, config.bc_epochs + 1):
        for idx in minibatches(len(transitions), config.batch_size, rng):
            loss, grads = bc_loss(policy, obs[idx], actions[idx])
            _check_finite("behavior cloning", epoch, bc_loss=loss)
            grads, _ = clip_by_global_norm(grads, config.max_grad_norm)
            policy, opt = adam_step(policy, grads, opt)
            policy = policy.clipped()
        epoch_loss, _ = bc_loss(policy, obs, actions)
        _check_finite("behavior cloning", epoch, bc_loss=epoch_loss)
        rows.append({"phase": "bc", "step": epoch, "bc_loss": epoch_loss})
        if epoch_loss < best_loss:
            best_loss, best_policy = epoch_loss, policy.copy()
        if epoch % progress_interval == 0:
            logger.info("bc epoch %d/%d loss %.4f", epoch, config.bc_epochs, epoch_loss)

    return BcResult(best_policy, pd.DataFrame(rows), initial_loss, best_loss)


@dataclass
class CriticResult:
    critic: Critic
    log: pd.DataFrame


def _split_holdout(
    n: int, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    holdout = int(n * fraction)
    if holdout == 0:
        return order, order
    return order[holdout:], order[:holdout]


def sarsa_targets(
    target: Critic, transitions: TransitionDataset, indices: np.ndarray, gamma: float
) -> np.ndarray:
    """r + gamma * Q_target(x', a') with the bootstrap dropped on done transitions."""
    bootstrap = target.predict(
        transitions.next_observations[indices], transitions.next_actions[indices]
    )
    alive = ~transitions.dones[indices]
    return transitions.rewards[indices] + gamma * alive * bootstrap


def fit_q_sarsa(
    transitions: TransitionDataset,
    gamma: float,
    config: BppoConfig,
    seed: int,
    progress_interval: int = 10,
) -> CriticResult:
    """
    Fitted SARSA evaluation of the behavior policy.

    Targets use a snapshot of Q refreshed at the start of every epoch. The Bellman
    residual on a held-out split is logged per epoch.

    Raises:
        TrainingDivergenceError: If the loss becomes non-finite.
    """
    rng = np.random.default_rng(seed)
    q_net = Critic.q_net(rng, config.critic_hidden_sizes)
    opt = adam_init(q_net, config.q_lr)
    train_idx, holdout_idx = _split_holdout(len(transitions), config.holdout_fraction, rng)
    rows = []
    for epoch in range(1, config.q_epochs + 1):
        target_net = q_net.copy()
        targets = sarsa_targets(target_net, transitions, train_idx, gamma)
        losses = []
        for batch in minibatches(train_idx.size, config.batch_size, rng):
            idx = train_idx[batch]
            loss, grads = regression_loss(
                q_net, transitions.observations[idx], targets[batch], transitions.actions[idx]
            )
            _check_finite("q fitting", epoch, q_loss=loss)
            grads, _ = clip_by_global_norm(grads, config.max_grad_norm)
            q_net, opt = adam_step(q_net, grads, opt)
            losses.append(loss)
        residual_targets = sarsa_targets(q_net, transitions, holdout_idx, gamma)
        residual = float(
            np.mean(
                (
                    q_net.predict(
                        transitions.observations[holdout_idx], transitions.actions[holdout_idx]
                    )
                    - residual_targets
                )
                ** 2
            )
        )
        rows.append(
            {
                "phase": "q",
                "step": epoch,
                "q_loss": float(np.mean(losses)),
                "holdout_residual": residual,
            }
        )
        if epoch % progress_interval == 0:
            logger.info(
                "q epoch %d/%d loss %.4f holdout residual %.4f",
                epoch,
                config.q_epochs,
                rows[-1]["q_loss"],
                residual,
            )
    return CriticResult(q_net, pd.DataFrame(rows))


def fit_value_mc(
    transitions: TransitionDataset,
    gamma: float,
    config: BppoConfig,
    seed: int,
    progress_interval: int = 10,
) -> CriticResult:
    """
    Regresses V(x) onto the per-trajectory discounted return-to-go.

    Raises:
        TrainingDivergenceError: If the loss becomes non-finite.
    """
    rng = np.random.default_rng(seed)
    v_net = Critic.value_net(rng, config.critic_hidden_sizes)
    opt = adam_init(v_net, config.v_lr)
    targets = discounted_returns(transitions.rewards, transitions.dones, gamma)
    rows = []
    for epoch in range(1, config.v_epochs + 1):
        losses = []
        for idx in minibatches(len(transitions), config.batch_size, rng):
            loss, grads = regression_loss(v_net, transitions.observations[idx], targets[idx])
            _check_finite("value fitting", epoch, v_loss=loss)
            grads, _ = clip_by_global_norm(grads, config.max_grad_norm)
            v_net, opt = adam_step(v_net, grads, opt)
            losses.append(loss)
        rows.append({"phase": "v", "step": epoch, "v_loss": float(np.mean(losses))})
        if epoch % progress_interval == 0:
            logger.info("v epoch %d/%d loss %.4f", epoch, config.v_epochs, rows[-1]["v_loss"])
    return CriticResult(v_net, pd.DataFrame(rows))


def dataset_advantages(
    q_net: Critic, v_net: Critic, transitions: TransitionDataset
) -> np.ndarray:
    """Q(x, a) - V(x) over the dataset, normalized."""
    raw = q_net.predict(transitions.observations, transitions.actions) - v_net.predict(
        transitions.observations
    )
    return normalize_advantages(raw)


def bppo_update(
    policy: GaussianPolicy,
    behavior: GaussianPolicy,
    observations: np.ndarray,
    actions: np.ndarray,
    advantages: np.ndarray,
    clip_epsilon: float,
    opt: AdamState,
    max_grad_norm: float = 10.0,
) -> tuple[GaussianPolicy, AdamState, float]:
    """
    One Adam ascent step of the clipped objective with ratio pi / pi_beta.

    ``behavior`` stays fixed; the log-probability gap is clipped at 20 before
    exponentiation.

    Returns:
        (updated policy, optimizer state, clipped objective before the step)
    """
    behavior_log_probs, _ = policy_log_prob(behavior, observations, actions)
    result = ppo_clip_objective(
        policy,
        observations,
        actions,
        behavior_log_probs,
        advantages,
        clip_epsilon,
        max_log_ratio=LOG_RATIO_CLIP,
    )
    grads, _ = clip_by_global_norm(result.grads, max_grad_norm)
    policy, opt = adam_step(policy, grads, opt)
    return policy.clipped(), opt, result.objective


@dataclass
class EvalOutcome:
    mean_return: float
    success_rate: float


def evaluate_policy(
    policy: GaussianPolicy,
    env_config: EnvConfig,
    episodes: int,
    seed: int,
    params_id: ParamsId = ParamsId.PA,
) -> EvalOutcome:
    """Mean offline-mode return and success rate of the mean action on seeded episodes."""
    trajectories = run_episodes(
        policy,
        env_config,
        episodes,
        np.random.default_rng(seed),
        mode=RewardMode.BPPO,
        params_id=params_id,
        deterministic=True,
    )
    return EvalOutcome(
        mean_return=float(np.mean([t.total_reward for t in trajectories])),
        success_rate=float(np.mean([t.success for t in trajectories])),
    )


@dataclass
class BppoResult:
    """Outcome of the offline stage."""

    policy: GaussianPolicy
    bc_policy: GaussianPolicy
    q_net: Critic
    v_net: Critic
    log: pd.DataFrame
    bc_eval: EvalOutcome
    best_eval: EvalOutcome
    transitions_hash: str


def train_bppo(
    dataset: Dataset,
    env_config: EnvConfig,
    config: BppoConfig,
    seed: int,
    params: Optional[VehicleParams] = None,
    progress_interval: int = 10,
) -> BppoResult:
    """
    Behavior cloning, Q/V fitting, then BPPO steps against a frozen behavior policy.

    Every ``eval_interval`` steps the policy is evaluated in ``env_config``; a strictly
    better mean return than the running best (the behavior-cloned policy to start with)
    overwrites the behavior policy and becomes the returned policy.

    Args:
        dataset: Offline training set.
        env_config: Evaluation environment.
        config: Offline hyperparameters.
        seed: Stream seed of the stage.
        params: Vehicle constants used to rebuild rewards from the datums;
            defaults to the evaluation environment's.

    Raises:
        OfflineContractError: If the training transitions change during the run.
        TrainingDivergenceError: If a loss becomes non-finite.
    """
    start_time = time.time()
    transitions = to_transitions(dataset, params or env_config.params, env_config.reward)
    expected_hash = transitions.content_hash()
    eval_seed = int(np.random.default_rng(seed).integers(2**63 - 1))

    bc = behavior_clone(transitions, config, seed + 1, progress_interval)
    q_fit = fit_q_sarsa(transitions, config.gamma, config, seed + 2, progress_interval)
    v_fit = fit_value_mc(transitions, config.gamma, config, seed + 3, progress_interval)
    advantages = dataset_advantages(q_fit.critic, v_fit.critic, transitions)

    bc_eval = evaluate_policy(bc.policy, env_config, config.eval_episodes, eval_seed)
    logger.info(
        "bc policy: eval return %.2f, success %.3f", bc_eval.mean_return, bc_eval.success_rate
    )

    rng = np.random.default_rng(seed + 4)
    behavior = bc.policy.copy()
    policy = bc.policy.copy()
    best_policy, best_eval = bc.policy.copy(), bc_eval
    opt = adam_init(policy, config.bppo_lr)
    rows = []
    for step in range(1, config.bppo_steps + 1):
        idx = rng.choice(
            len(transitions), size=min(config.batch_size, len(transitions)), replace=False
        )
        clip_epsilon = config.clip_epsilon * config.clip_decay ** (step - 1)
        policy, opt, objective = bppo_update(
            policy,
            behavior,
            transitions.observations[idx],
            transitions.actions[idx],
            advantages[idx],
            clip_epsilon,
            opt,
            config.max_grad_norm,
        )
        _check_finite("bppo", step, bppo_objective=objective)
        row = {"phase": "bppo", "step": step, "bppo_objective": objective, "overwrite": False}
        if step % config.eval_interval == 0 or step == config.bppo_steps:
            outcome = evaluate_policy(policy, env_config, config.eval_episodes, eval_seed)
            row["eval_return"] = outcome.mean_return
            row["eval_success"] = outcome.success_rate
            if outcome.mean_return > best_eval.mean_return:
                behavior = policy.copy()
                best_policy, best_eval = policy.copy(), outcome
                row["overwrite"] = True
            logger.info(
                "bppo step %d/%d: eval return %.2f, success %.3f, best %.2f",
                step,
                config.bppo_steps,
                outcome.mean_return,
                outcome.success_rate,
                best_eval.mean_return,
            )
        rows.append(row)

    received_hash = transitions.content_hash()
    if received_hash != expected_hash:
        raise OfflineContractError(expected_hash, received_hash)

    log = pd.concat(
        [bc.log, q_fit.log, v_fit.log, pd.DataFrame(rows)], ignore_index=True, sort=False
    )
    logger.info(
        "offline training on %s finished in %.2f seconds: bc success %.3f, bppo success %.3f",
        dataset.name,
        time.time() - start_time,
        bc_eval.success_rate,
        best_eval.success_rate,
    )
    return BppoResult(
        policy=best_policy,
        bc_policy=bc.policy,
        q_net=q_fit.critic,
        v_net=v_fit.critic,
        log=log,
        bc_eval=bc_eval,
        best_eval=best_eval,
        transitions_hash=expected_hash,
    )
