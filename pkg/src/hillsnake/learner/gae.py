from __future__ import annotations

from typing import Sequence

import numpy as np

from ..engine import ContractViolation


def compute_gae(
    rewards: Sequence[float],
    values: Sequence[float],
    dones: Sequence[bool],
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and bootstrapped returns.

    ``values`` carries one extra trailing entry, the bootstrap value of the
    state after the last reward. A done step ignores everything after it.
    """
    r = np.asarray(rewards, dtype=float)
    v = np.asarray(values, dtype=float)
    d = np.asarray(dones, dtype=float)
    if v.shape != (r.size + 1,) or d.shape != r.shape:
        raise ContractViolation(
            f"need len(values) == len(rewards) + 1 == len(dones) + 1, got "
            f"{v.size}, {r.size}, {d.size}"
        )
    adv = np.zeros_like(r)
    running = 0.0
    for t in range(r.size - 1, -1, -1):
        live = 1.0 - d[t]
        delta = r[t] + gamma * v[t + 1] * live - v[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
    return adv, adv + v[:-1]
