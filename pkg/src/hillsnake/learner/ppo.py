"""Clipped-surrogate PPO loss, its analytic gradient, and the update loop."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..engine import ConfigurationError
from .network import N_ACTIONS, PolicyParams, backward, forward, masked_log_softmax

ADV_STD_FLOOR = 1e-8


class DivergenceError(RuntimeError):
    """The PPO loss became non-finite; the update was abandoned."""


@dataclass(frozen=True)
class PPOConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip_range: float = 0.2
    learning_rate: float = 3e-4
    rollout_horizon: int = 512
    epochs: int = 4
    minibatch_size: int = 128
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: Optional[float] = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"lam must lie in [0, 1], got {self.lam}")
        if self.clip_range <= 0.0:
            raise ConfigurationError(f"clip_range must be positive, got {self.clip_range}")
        for name in ("rollout_horizon", "epochs", "minibatch_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.learning_rate <= 0.0:
            raise ConfigurationError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Batch:
    observations: np.ndarray  # (B, D)
    actions: np.ndarray  # (B,) int
    old_log_probs: np.ndarray  # (B,)
    advantages: np.ndarray  # (B,)
    returns: np.ndarray  # (B,)
    masks: Optional[np.ndarray] = None  # (B, 4) 0/1, None when unmasked

    def __len__(self) -> int:
        return self.actions.shape[0]

    def take(self, idx: np.ndarray) -> "Batch":
        return Batch(
            self.observations[idx],
            self.actions[idx],
            self.old_log_probs[idx],
            self.advantages[idx],
            self.returns[idx],
            None if self.masks is None else self.masks[idx],
        )


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    adv = np.asarray(adv, dtype=float)
    if adv.size == 0:
        return adv
    return (adv - adv.mean()) / max(adv.std(), ADV_STD_FLOOR)


def loss_and_grad(
    params: PolicyParams, batch: Batch, config: PPOConfig, need_grad: bool = True
) -> tuple[float, dict[str, float], Optional[dict[str, np.ndarray]]]:
    """Total loss ``policy + value_coef * value - entropy_coef * entropy``.

    Advantages are used as given; normalization is the caller's job.
    """
    n = len(batch)
    cache = forward(params, batch.observations)
    logp = masked_log_softmax(cache.logits, batch.masks)
    probs = np.exp(logp)
    rows = np.arange(n)
    logp_a = logp[rows, batch.actions]
    ratio = np.exp(logp_a - batch.old_log_probs)
    adv = batch.advantages
    c = config.clip_range
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - c, 1.0 + c) * adv
    policy_loss = -np.minimum(unclipped, clipped).mean()

    plogp = np.where(probs > 0.0, probs * np.where(probs > 0.0, logp, 0.0), 0.0)
    entropy_rows = -plogp.sum(axis=1)
    entropy = entropy_rows.mean()

    err = cache.values - batch.returns
    value_loss = (err**2).mean()

    total = policy_loss + config.value_coef * value_loss - config.entropy_coef * entropy
    diagnostics = {
        "loss": float(total),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "clip_fraction": float((np.abs(ratio - 1.0) > c).mean()) if n else 0.0,
        "approx_kl": float((batch.old_log_probs - logp_a).mean()) if n else 0.0,
    }
    if not need_grad:
        return float(total), diagnostics, None

    # d(-min(unclipped, clipped))/d logp_a: the clipped branch is flat in ratio
    takes_unclipped = unclipped <= clipped
    g = np.where(takes_unclipped, ratio * adv, 0.0)
    onehot = np.zeros_like(probs)
    onehot[rows, batch.actions] = 1.0
    d_logits = -(g[:, None] * (onehot - probs)) / n
    # dH/dz_k = -p_k (log p_k + H); masked entries have p_k = 0
    d_entropy = -(plogp + probs * entropy_rows[:, None])
    d_logits -= config.entropy_coef * d_entropy / n
    d_values = config.value_coef * 2.0 * err / n
    return float(total), diagnostics, backward(params, cache, d_logits, d_values)


@dataclass
class Adam:
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def apply(self, params: PolicyParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params.arrays[name] -= self.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: Optional[float]) -> float:
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


def ppo_update(
    params: PolicyParams,
    batch: Batch,
    config: PPOConfig,
    rng: np.random.Generator,
    optimizer: Optional[Adam] = None,
) -> tuple[PolicyParams, dict[str, float]]:
    """Run ``config.epochs`` passes of shuffled minibatch Adam steps.

    Returns new parameters (the input is left untouched) and diagnostics
    averaged over minibatches. Raises ``DivergenceError`` on a non-finite
    loss, in which case nothing is updated.
    """
    if optimizer is None:
        optimizer = Adam(config.learning_rate)
    batch = Batch(
        np.asarray(batch.observations, dtype=float).reshape(len(batch), -1),
        np.asarray(batch.actions, dtype=np.int64),
        np.asarray(batch.old_log_probs, dtype=float),
        normalize_advantages(batch.advantages),
        np.asarray(batch.returns, dtype=float),
        None if batch.masks is None else np.asarray(batch.masks, dtype=np.int8),
    )
    new = params.copy()
    snapshot = (optimizer.t, {k: v.copy() for k, v in optimizer.m.items()},
                {k: v.copy() for k, v in optimizer.v.items()})
    totals: dict[str, float] = {}
    count = 0
    n = len(batch)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            mb = batch.take(order[start:start + config.minibatch_size])
            with np.errstate(invalid="ignore", over="ignore"):
                loss, diag, grads = loss_and_grad(new, mb, config)
            if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
                optimizer.t, optimizer.m, optimizer.v = snapshot
                raise DivergenceError(f"non-finite PPO loss ({loss}) after {count} minibatches")
            diag["grad_norm"] = clip_grad_norm(grads, config.max_grad_norm)
            optimizer.apply(new, grads)
            for k, v in diag.items():
                totals[k] = totals.get(k, 0.0) + v
            count += 1
    return new, {k: v / max(count, 1) for k, v in totals.items()}


def action_log_probs(
    params: PolicyParams, observations: np.ndarray, actions: np.ndarray,
    masks: Optional[np.ndarray] = None,
) -> np.ndarray:
    cache = forward(params, np.asarray(observations, dtype=float).reshape(len(actions), -1))
    logp = masked_log_softmax(cache.logits, masks)
    return logp[np.arange(len(actions)), np.asarray(actions)]


__all__ = [
    "ADV_STD_FLOOR",
    "Adam",
    "Batch",
    "DivergenceError",
    "N_ACTIONS",
    "PPOConfig",
    "action_log_probs",
    "loss_and_grad",
    "normalize_advantages",
    "ppo_update",
]
