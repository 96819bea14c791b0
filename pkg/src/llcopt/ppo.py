"""Proximal policy optimization with a diagonal Gaussian policy.

The policy network maps the 16-component observation to 6 action means; a
state-independent learnable log standard deviation completes the
distribution.  Actions applied to the environment are the samples clamped
to [-1, 1], while log-probabilities (and the surrogate ratio at update
time) are always evaluated on the raw pre-clamp samples, so the importance
ratio is exact.  Updates minimize the clipped surrogate plus a value
regression term, each through its own Adam optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .networks import Adam, Mlp

OBS_SIZE = 16
ACT_SIZE = 6
HIDDEN_SIZE = 256
LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class NonFiniteLossError(RuntimeError):
    """An update produced a non-finite loss; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class PpoConfig:
    learning_rate: float = 1e-5
    clip_eps: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs_per_batch: int = 10
    batch_episodes: int = 80
    minibatch_size: int = 128
    value_coeff: float = 1.0
    entropy_coeff: float = 0.0
    log_std_init: float = 0.0
    lr_decay_to: float = 1.0

    def validate(self) -> None:
        if self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0.0 <= self.lr_decay_to <= 1.0:
            raise ValueError(f"lr_decay_to must be in [0, 1], got {self.lr_decay_to}")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError(f"clip_eps must be in (0, 1), got {self.clip_eps}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if not LOG_STD_MIN <= self.log_std_init <= LOG_STD_MAX:
            raise ValueError(
                f"log_std_init must be in [{LOG_STD_MIN}, {LOG_STD_MAX}], got {self.log_std_init}"
            )
        for name in ("epochs_per_batch", "batch_episodes", "minibatch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class Trajectory:
    """One complete episode as flat arrays.

    actions holds the raw (pre-clamp) Gaussian samples the log-probs were
    computed on; clip to [-1, 1] to recover what the environment saw.
    """

    states: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)


def gaussian_log_prob(x: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Diagonal Gaussian log-density, summed over the action dimensions."""
    z = (x - mean) / np.exp(log_std)
    return np.sum(-0.5 * z**2 - log_std - _HALF_LOG_2PI, axis=-1)


def gaussian_entropy(log_std: np.ndarray) -> float:
    """Entropy of the diagonal Gaussian (nats)."""
    return float(np.sum(log_std + 0.5 + _HALF_LOG_2PI))


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and returns for one episode.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t), accumulated
    backwards with factor gamma * lam; returns are advantages + values.
    """
    steps = len(rewards)
    advantages = np.zeros(steps)
    running = 0.0
    for t in range(steps - 1, -1, -1):
        next_value = values[t + 1] if t + 1 < steps else 0.0
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        advantages[t] = running
    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


class PpoAgent:
    """Policy/value networks plus the clipped-surrogate update."""

    def __init__(
        self,
        config: PpoConfig | None = None,
        seed: int = 0,
        obs_size: int = OBS_SIZE,
        act_size: int = ACT_SIZE,
        hidden_size: int = HIDDEN_SIZE,
    ) -> None:
        self.config = config or PpoConfig()
        self.config.validate()
        rng = np.random.default_rng(seed)
        self.policy = Mlp((obs_size, hidden_size, hidden_size, act_size), rng, head_gain=0.01)
        self.log_std = np.full(act_size, float(self.config.log_std_init))
        self.value = Mlp((obs_size, hidden_size, hidden_size, 1), rng, head_gain=1.0)
        self.opt_policy = Adam(self.policy.parameters() + [self.log_std], self.config.learning_rate)
        self.opt_value = Adam(self.value.parameters(), self.config.learning_rate)

    @property
    def clamped_log_std(self) -> np.ndarray:
        return np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)

    def policy_forward(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Action means, log-std and state values; batched or single."""
        states = np.asarray(states, dtype=float)
        if not np.all(np.isfinite(states)):
            raise ValueError("non-finite observation")
        single = states.ndim == 1
        mean = self.policy.forward(states)
        value = self.value.forward(states)[:, 0]
        if single:
            return mean[0], self.clamped_log_std.copy(), value[0]
        return mean, self.clamped_log_std.copy(), value

    def sample_action(
        self, mean: np.ndarray, log_std: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, float, np.ndarray]:
        """Draw one action; returns (clamped action, log-prob, raw sample)."""
        raw = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        log_prob = float(gaussian_log_prob(raw, mean, log_std))
        return np.clip(raw, -1.0, 1.0), log_prob, raw

    def deterministic_action(self, state: np.ndarray) -> np.ndarray:
        mean, _, _ = self.policy_forward(state)
        return np.clip(mean, -1.0, 1.0)

    def set_learning_rate(self, lr: float) -> None:
        """Adjust both optimizers, e.g. for a decay schedule."""
        self.opt_policy.lr = lr
        self.opt_value.lr = lr

    def update(self, trajectories: list[Trajectory], rng: np.random.Generator) -> dict:
        """Run the configured epochs of minibatch updates over a batch.

        Returns mean loss statistics over all minibatch iterations.
        Raises NonFiniteLossError (weights untouched for that minibatch)
        if a loss goes non-finite.
        """
        if not trajectories:
            raise ValueError("need at least one trajectory")
        cfg = self.config
        states = np.concatenate([t.states for t in trajectories])
        actions = np.concatenate([t.actions for t in trajectories])
        log_probs_old = np.concatenate([t.log_probs for t in trajectories])
        adv_parts, ret_parts = [], []
        for t in trajectories:
            adv, ret = compute_gae(t.rewards, t.values, t.dones, cfg.gamma, cfg.gae_lambda)
            adv_parts.append(adv)
            ret_parts.append(ret)
        advantages = normalize_advantages(np.concatenate(adv_parts))
        returns = np.concatenate(ret_parts)

        n = len(states)
        totals = {"policy_loss": 0.0, "value_loss": 0.0, "kl": 0.0, "entropy": 0.0}
        iterations = 0
        for _ in range(cfg.epochs_per_batch):
            order = rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                idx = order[start : start + cfg.minibatch_size]
                stats = self._minibatch_step(
                    states[idx], actions[idx], log_probs_old[idx],
                    advantages[idx], returns[idx],
                )
                for key in totals:
                    totals[key] += stats[key]
                iterations += 1
        return {key: value / iterations for key, value in totals.items()}

    def _minibatch_step(self, states, actions, log_probs_old, advantages, returns) -> dict:
        _, stats, grads_policy, grads_value = self.loss_and_grads(
            states, actions, log_probs_old, advantages, returns
        )
        self.opt_policy.step(grads_policy)
        self.opt_value.step(grads_value)
        return stats

    def loss_and_grads(
        self,
        states: np.ndarray,
        actions: np.ndarray,
        log_probs_old: np.ndarray,
        advantages: np.ndarray,
        returns: np.ndarray,
    ) -> tuple[float, dict, list[np.ndarray], list[np.ndarray]]:
        """One evaluation of the PPO objective and all its gradients.

        Loss = -mean(min(ratio * A, clip(ratio) * A))
               + value_coeff * mean((V - returns)^2)
               - entropy_coeff * entropy.
        """
        cfg = self.config
        batch = len(states)
        log_std = self.clamped_log_std
        sigma_sq = np.exp(2.0 * log_std)

        mean = self.policy.forward(states)
        log_probs_new = gaussian_log_prob(actions, mean, log_std)
        ratio = np.exp(log_probs_new - log_probs_old)
        unclipped = ratio * advantages
        clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantages
        surrogate = np.minimum(unclipped, clipped)
        policy_loss = -float(np.mean(surrogate))
        entropy = gaussian_entropy(log_std)

        values = self.value.forward(states)[:, 0]
        value_loss = float(np.mean((values - returns) ** 2))
        loss = policy_loss + cfg.value_coeff * value_loss - cfg.entropy_coeff * entropy

        stats = {
            "policy_loss": policy_loss,
            "value_loss": value_loss,
            "kl": float(np.mean(log_probs_old - log_probs_new)),
            "entropy": entropy,
        }
        if not math.isfinite(loss):
            raise NonFiniteLossError("non-finite loss in update", stats)

        # d(policy_loss)/d(log pi_new): the clipped branch has zero gradient.
        unclipped_active = unclipped <= clipped
        d_logp = np.where(unclipped_active, -ratio * advantages, 0.0) / batch
        residual = (actions - mean) / sigma_sq
        self.policy.backward(d_logp[:, None] * residual)
        grad_log_std = np.sum(
            d_logp[:, None] * (residual * (actions - mean) - 1.0), axis=0
        )
        grad_log_std -= cfg.entropy_coeff  # dH/d(log sigma_j) = 1
        grad_log_std *= (self.log_std >= LOG_STD_MIN) & (self.log_std <= LOG_STD_MAX)

        self.value.backward((2.0 * cfg.value_coeff / batch) * (values - returns)[:, None])

        grads_policy = [g.copy() for g in self.policy.gradients()] + [grad_log_std]
        grads_value = [g.copy() for g in self.value.gradients()]
        return loss, stats, grads_policy, grads_value
