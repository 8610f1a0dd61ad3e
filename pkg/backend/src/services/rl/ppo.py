"""
On-policy PPO-clip training of the data-generation policies.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from backend.src.common.enums import ParamsId, RewardMode
from backend.src.common.known_exception import (
    KnownException,
    TrainingDivergenceError,
)
from backend.src.core.config_loader import EnvConfig, PpoConfig
from backend.src.services.lander.env import LanderEnv
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

logger = logging.getLogger(__name__)

ADVANTAGE_EPSILON = 1e-8


@dataclass
class RolloutBatch:
    """
    Transitions gathered with the current policy.

    ``dones`` marks the last step of every episode segment (touchdown, timeout or the
    horizon cut); ``terminals`` marks true touchdowns only, after which no value is
    bootstrapped. ``next_values`` holds V(next observation) for every step.
    """

    observations: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    next_values: np.ndarray
    dones: np.ndarray
    terminals: np.ndarray
    episode_returns: list[float] = field(default_factory=list)
    episode_successes: list[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.rewards.shape[0])


def collect_rollouts(
    policy: GaussianPolicy,
    value_net: Critic,
    env_config: EnvConfig,
    n_steps: int,
    rng: np.random.Generator,
    params_id: ParamsId = ParamsId.PA,
) -> RolloutBatch:
    """
    Runs the stochastic policy for ``n_steps`` environment steps with shaped rewards.

    Every call starts a fresh episode; a segment still running at the horizon is cut and
    bootstrapped. ``episode_returns`` only lists episodes that finished inside the batch.
    """
    env = LanderEnv(env_config, mode=RewardMode.PPO, params_id=params_id)
    observations, actions, log_probs, rewards = [], [], [], []
    next_observations, dones, terminals = [], [], []
    episode_returns: list[float] = []
    episode_successes: list[bool] = []

    obs = env.reset(rng)
    running_return = 0.0
    for step in range(n_steps):
        action, log_prob = policy.sample(obs, rng)
        result = env.step(action)
        observations.append(obs)
        actions.append(action)
        log_probs.append(log_prob)
        rewards.append(result.reward)
        next_observations.append(result.observation)
        running_return += result.reward

        episode_over = result.terminal
        terminals.append(result.touchdown)
        dones.append(episode_over or step == n_steps - 1)
        if episode_over:
            episode_returns.append(running_return)
            episode_successes.append(result.success)
            running_return = 0.0
            obs = env.reset(rng)
        else:
            obs = result.observation

    obs_array = np.vstack(observations)
    return RolloutBatch(
        observations=obs_array,
        actions=np.vstack(actions),
        log_probs=np.asarray(log_probs),
        rewards=np.asarray(rewards),
        values=value_net.predict(obs_array),
        next_values=value_net.predict(np.vstack(next_observations)),
        dones=np.asarray(dones, dtype=bool),
        terminals=np.asarray(terminals, dtype=bool),
        episode_returns=episode_returns,
        episode_successes=episode_successes,
    )


def compute_gae(
    batch: RolloutBatch, gamma: float, gae_lambda: float
) -> tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimation over the batch's episode segments.

    Returns:
        (advantages, value targets); targets are advantages plus the value baseline.
        Advantages are returned raw, see ``normalize_advantages``.
    """
    n = len(batch)
    advantages = np.zeros(n)
    last = 0.0
    for t in reversed(range(n)):
        bootstrap = 0.0 if batch.terminals[t] else batch.next_values[t]
        delta = batch.rewards[t] + gamma * bootstrap - batch.values[t]
        carry = 0.0 if batch.dones[t] else last
        last = delta + gamma * gae_lambda * carry
        advantages[t] = last
    return advantages, advantages + batch.values


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance."""
    return (advantages - advantages.mean()) / (advantages.std() + ADVANTAGE_EPSILON)


@dataclass
class ClipObjective:
    """Value and gradients of the clipped surrogate on one batch."""

    objective: float
    loss: float
    grads: GaussianPolicy
    clip_fraction: float
    approx_kl: float


def ppo_clip_objective(
    policy: GaussianPolicy,
    observations: np.ndarray,
    actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    clip_epsilon: float,
    entropy_coef: float = 0.0,
    max_log_ratio: Optional[float] = None,
) -> ClipObjective:
    """
    Mean of min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).

    The loss is the negated objective minus the entropy bonus; ``grads`` are gradients
    of that loss. In the clipped region the ratio carries no gradient. ``max_log_ratio``
    bounds |log ratio| before exponentiation.
    """
    log_probs, trace = policy_log_prob(policy, observations, actions)
    log_ratio = log_probs - old_log_probs
    if max_log_ratio is not None:
        log_ratio = np.clip(log_ratio, -max_log_ratio, max_log_ratio)
    ratio = np.exp(log_ratio)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    n = advantages.shape[0]
    objective = float(np.mean(np.minimum(unclipped, clipped)))
    entropy = policy.entropy()

    active = unclipped <= clipped
    grad_log_prob = -np.where(active, unclipped, 0.0) / n
    grads = policy_log_prob_backward(policy, trace, grad_log_prob, grad_entropy=-entropy_coef)
    return ClipObjective(
        objective=objective,
        loss=-objective - entropy_coef * entropy,
        grads=grads,
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > clip_epsilon)),
        approx_kl=float(np.mean(-log_ratio)),
    )


@dataclass
class PpoResult:
    """Best policy, its value function and the per-update log."""

    policy: GaussianPolicy
    value_net: Critic
    log: pd.DataFrame
    best_eval_return: float
    best_eval_success: float


class PpoTrainer:
    """
    PPO-clip loop: collect, estimate advantages, optimize, evaluate.

    The returned policy is the one with the highest mean evaluation return.
    """

    def __init__(
        self,
        env_config: EnvConfig,
        ppo_config: PpoConfig,
        seed: int,
        params_id: ParamsId = ParamsId.PA,
        progress_interval: int = 10,
    ):
        self.env_config = env_config
        self.config = ppo_config
        self.params_id = ParamsId(params_id)
        self.seed = seed
        self.progress_interval = progress_interval
        self.rng = np.random.default_rng(seed)
        self.policy = GaussianPolicy.create(
            self.rng, ppo_config.hidden_sizes, ppo_config.init_log_std
        )
        self.value_net = Critic.value_net(self.rng, ppo_config.hidden_sizes)
        self.policy_opt: AdamState = adam_init(self.policy, ppo_config.policy_lr)
        self.value_opt: AdamState = adam_init(self.value_net, ppo_config.value_lr)

    def evaluate(self) -> tuple[float, float]:
        """Mean shaped return and success rate of the mean action on fixed episodes."""
        eval_rng = np.random.default_rng([self.seed, 1])
        trajectories = run_episodes(
            self.policy,
            self.env_config,
            self.config.eval_episodes,
            eval_rng,
            mode=RewardMode.PPO,
            params_id=self.params_id,
            deterministic=True,
        )
        returns = [t.total_reward for t in trajectories]
        successes = [t.success for t in trajectories]
        return float(np.mean(returns)), float(np.mean(successes))

    def _optimize(
        self,
        batch: RolloutBatch,
        advantages: np.ndarray,
        targets: np.ndarray,
        update: int,
    ) -> tuple[float, float]:
        cfg = self.config
        n = len(batch)
        normalized = normalize_advantages(advantages)
        policy_losses, value_losses = [], []
        for _ in range(cfg.epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                idx = order[start : start + cfg.minibatch_size]
                result = ppo_clip_objective(
                    self.policy,
                    batch.observations[idx],
                    batch.actions[idx],
                    batch.log_probs[idx],
                    normalized[idx],
                    cfg.clip_epsilon,
                    cfg.entropy_coef,
                )
                value_loss, value_grads = regression_loss(
                    self.value_net, batch.observations[idx], targets[idx]
                )
                if not (np.isfinite(result.loss) and np.isfinite(value_loss)):
                    raise TrainingDivergenceError(
                        "ppo",
                        update,
                        f"policy loss: {result.loss}, value loss: {value_loss}",
                    )
                policy_grads, _ = clip_by_global_norm(result.grads, cfg.max_grad_norm)
                value_grads, _ = clip_by_global_norm(value_grads, cfg.max_grad_norm)
                self.policy, self.policy_opt = adam_step(
                    self.policy, policy_grads, self.policy_opt
                )
                self.policy = self.policy.clipped()
                self.value_net, self.value_opt = adam_step(
                    self.value_net, value_grads, self.value_opt
                )
                policy_losses.append(result.loss)
                value_losses.append(value_loss)
        return float(np.mean(policy_losses)), float(np.mean(value_losses))

    def train(self) -> PpoResult:
        """
        Runs ``total_updates`` updates.

        Raises:
            TrainingDivergenceError: If a loss becomes non-finite.
        """
        cfg = self.config
        start_time = time.time()
        rows = []
        best_policy = self.policy.copy()
        best_value = self.value_net.copy()
        best_return, best_success = -np.inf, 0.0

        logger.info(
            "starting ppo training on %s for %d updates", self.params_id.value, cfg.total_updates
        )
        for update in range(1, cfg.total_updates + 1):
            batch = collect_rollouts(
                self.policy,
                self.value_net,
                self.env_config,
                cfg.rollout_steps,
                self.rng,
                self.params_id,
            )
            advantages, targets = compute_gae(batch, cfg.gamma, cfg.gae_lambda)
            policy_loss, value_loss = self._optimize(batch, advantages, targets, update)

            eval_return, eval_success = np.nan, np.nan
            if update % cfg.eval_interval == 0 or update == cfg.total_updates:
                eval_return, eval_success = self.evaluate()
                if eval_return > best_return:
                    best_return, best_success = eval_return, eval_success
                    best_policy = self.policy.copy()
                    best_value = self.value_net.copy()

            rows.append(
                {
                    "update": update,
                    "mean_return": float(np.mean(batch.episode_returns))
                    if batch.episode_returns
                    else np.nan,
                    "success_rate": float(np.mean(batch.episode_successes))
                    if batch.episode_successes
                    else np.nan,
                    "episodes": len(batch.episode_returns),
                    "policy_loss": policy_loss,
                    "value_loss": value_loss,
                    "eval_return": eval_return,
                    "eval_success": eval_success,
                }
            )
            if update % self.progress_interval == 0:
                logger.info(
                    "ppo %s update %d/%d: return %.2f, success %.2f, eval %.2f",
                    self.params_id.value,
                    update,
                    cfg.total_updates,
                    rows[-1]["mean_return"],
                    rows[-1]["success_rate"],
                    best_return,
                )
            logger.debug("ppo update %d losses %.4f %.4f", update, policy_loss, value_loss)

        logger.info(
            "ppo training on %s finished in %.2f seconds, best eval return %.2f",
            self.params_id.value,
            time.time() - start_time,
            best_return,
        )
        return PpoResult(
            policy=best_policy,
            value_net=best_value,
            log=pd.DataFrame(rows),
            best_eval_return=float(best_return),
            best_eval_success=float(best_success),
        )


def train_ppo(
    params_id: ParamsId,
    env_config: EnvConfig,
    ppo_config: PpoConfig,
    seed: int,
    progress_interval: int = 10,
) -> PpoResult:
    """
    Trains a data-generation policy for one parameter set.

    Raises:
        TrainingDivergenceError: If a loss becomes non-finite.
    """
    try:
        return PpoTrainer(env_config, ppo_config, seed, params_id, progress_interval).train()
    except KnownException:
        logger.error("ppo training on %s failed", ParamsId(params_id).value)
        raise
