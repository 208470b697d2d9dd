"""Per-agent gridworld observation: food, own snake, other snakes."""

from __future__ import annotations

import numpy as np

from .engine import BoardState, ContractViolation

FOOD, SELF, OTHERS = 0, 1, 2
HEAD_VALUE = 5.0


def encode(board: BoardState, agent_id: int, head_value: float = HEAD_VALUE) -> np.ndarray:
    """Return a ``(width, height, 3)`` float array indexed ``[x, y, channel]``.

    Body cells hold 1 and heads hold ``head_value``; stacked segments are
    written once, and eliminated snakes are left out.
    """
    if not any(s.id == agent_id for s in board.snakes):
        raise ContractViolation(f"unknown agent id {agent_id}")
    obs = np.zeros((board.width, board.height, 3))
    for c in board.food:
        obs[c.x, c.y, FOOD] = 1.0
    living = [s for s in board.snakes if s.alive]
    for s in living:
        ch = SELF if s.id == agent_id else OTHERS
        for c in s.body:
            obs[c.x, c.y, ch] = 1.0
    # heads last so a body cell of another snake never hides a head marker
    for s in living:
        head = s.body[0]
        obs[head.x, head.y, SELF if s.id == agent_id else OTHERS] = head_value
    return obs


def encode_all(board: BoardState, head_value: float = HEAD_VALUE) -> dict[int, np.ndarray]:
    return {s.id: encode(board, s.id, head_value) for s in board.snakes if s.alive}


def golden_dump(obs: np.ndarray) -> list[float]:
    """Flatten x-major, then y, then channel, for cross-implementation diffs."""
    return [float(v) for v in np.asarray(obs).reshape(-1)]
