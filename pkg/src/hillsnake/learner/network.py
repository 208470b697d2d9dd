"""Two-trunk MLP policy/value network with hand-written backprop.

Both trunks are ``flatten -> 128 tanh -> 128 tanh -> head``; the policy
head emits four logits and the value head one scalar. Parameters live in a
flat dict of float64 arrays so the optimizer and checkpoints can walk them
uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..engine import ContractViolation

N_ACTIONS = 4
HIDDEN = 128

PARAM_NAMES = (
    "pi_w1", "pi_b1", "pi_w2", "pi_b2", "pi_w3", "pi_b3",
    "v_w1", "v_b1", "v_w2", "v_b2", "v_w3", "v_b3",
)


@dataclass
class PolicyParams:
    arrays: dict[str, np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.arrays["pi_w1"].shape[0]

    @property
    def hidden(self) -> int:
        return self.arrays["pi_w1"].shape[1]

    def copy(self) -> "PolicyParams":
        return PolicyParams({k: v.copy() for k, v in self.arrays.items()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def n_parameters(self) -> int:
        return sum(v.size for v in self.arrays.values())


def init_params(
    input_dim: int,
    rng: np.random.Generator,
    hidden: int = HIDDEN,
    policy_head_scale: float = 0.01,
) -> PolicyParams:
    """Glorot-uniform trunks; the policy head is scaled down so the untrained
    policy starts near uniform."""

    def glorot(fan_in: int, fan_out: int, scale: float = 1.0) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return scale * rng.uniform(-limit, limit, size=(fan_in, fan_out))

    arrays = {}
    for prefix, out_dim, head_scale in (("pi", N_ACTIONS, policy_head_scale), ("v", 1, 1.0)):
        arrays[f"{prefix}_w1"] = glorot(input_dim, hidden)
        arrays[f"{prefix}_b1"] = np.zeros(hidden)
        arrays[f"{prefix}_w2"] = glorot(hidden, hidden)
        arrays[f"{prefix}_b2"] = np.zeros(hidden)
        arrays[f"{prefix}_w3"] = glorot(hidden, out_dim, head_scale)
        arrays[f"{prefix}_b3"] = np.zeros(out_dim)
    return PolicyParams(arrays)


def _as_batch(params: PolicyParams, observations: np.ndarray) -> np.ndarray:
    x = np.asarray(observations, dtype=float)
    if x.size == params.input_dim:
        return x.reshape(1, -1)
    if x.ndim >= 2:
        x = x.reshape(x.shape[0], -1)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ContractViolation(
            f"observation of shape {np.shape(observations)} does not match input dim "
            f"{params.input_dim}"
        )
    return x


def masked_log_softmax(logits: np.ndarray, masks: Optional[np.ndarray]) -> np.ndarray:
    """Log-probabilities with masked actions at ``-inf``.

    A row whose mask is entirely zero falls back to the unmasked softmax.
    """
    z = np.array(logits, dtype=float)
    if masks is not None:
        keep = np.asarray(masks, dtype=bool)
        keep = keep | ~keep.any(axis=1, keepdims=True)
        z = np.where(keep, z, -np.inf)
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


@dataclass
class ForwardCache:
    x: np.ndarray
    pi_h1: np.ndarray
    pi_h2: np.ndarray
    v_h1: np.ndarray
    v_h2: np.ndarray
    logits: np.ndarray
    values: np.ndarray


def forward(params: PolicyParams, x: np.ndarray) -> ForwardCache:
    p = params.arrays
    pi_h1 = np.tanh(x @ p["pi_w1"] + p["pi_b1"])
    pi_h2 = np.tanh(pi_h1 @ p["pi_w2"] + p["pi_b2"])
    logits = pi_h2 @ p["pi_w3"] + p["pi_b3"]
    v_h1 = np.tanh(x @ p["v_w1"] + p["v_b1"])
    v_h2 = np.tanh(v_h1 @ p["v_w2"] + p["v_b2"])
    values = (v_h2 @ p["v_w3"] + p["v_b3"])[:, 0]
    return ForwardCache(x, pi_h1, pi_h2, v_h1, v_h2, logits, values)


def backward(
    params: PolicyParams, cache: ForwardCache, d_logits: np.ndarray, d_values: np.ndarray
) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss given its derivatives w.r.t. logits and values."""
    p = params.arrays
    grads = {}
    for prefix, h1, h2, d_out in (
        ("pi", cache.pi_h1, cache.pi_h2, d_logits),
        ("v", cache.v_h1, cache.v_h2, d_values[:, None]),
    ):
        grads[f"{prefix}_w3"] = h2.T @ d_out
        grads[f"{prefix}_b3"] = d_out.sum(axis=0)
        d_h2 = (d_out @ p[f"{prefix}_w3"].T) * (1.0 - h2**2)
        grads[f"{prefix}_w2"] = h1.T @ d_h2
        grads[f"{prefix}_b2"] = d_h2.sum(axis=0)
        d_h1 = (d_h2 @ p[f"{prefix}_w2"].T) * (1.0 - h1**2)
        grads[f"{prefix}_w1"] = cache.x.T @ d_h1
        grads[f"{prefix}_b1"] = d_h1.sum(axis=0)
    return grads


def policy_forward(
    params: PolicyParams, observation: np.ndarray, mask: Optional[np.ndarray] = None
) -> tuple[np.ndarray, np.ndarray | float]:
    """Action probabilities and value estimate.

    A single observation returns a 4-vector and a float; a batch returns
    ``(B, 4)`` and ``(B,)`` arrays.
    """
    obs = np.asarray(observation, dtype=float)
    single = obs.size == params.input_dim and obs.ndim != 2
    x = _as_batch(params, obs)
    cache = forward(params, x)
    m = None if mask is None else np.asarray(mask).reshape(x.shape[0], N_ACTIONS)
    probs = np.exp(masked_log_softmax(cache.logits, m))
    if single:
        return probs[0], float(cache.values[0])
    return probs, cache.values
