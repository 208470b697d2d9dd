"""Battlesnake multi-agent reinforcement learning with human-engineered heuristics."""

__version__ = "0.1.0"

from .engine import (  # noqa: E402
    ACTIONS,
    Action,
    BoardState,
    ConfigurationError,
    ContractViolation,
    EventKind,
    GameConfig,
    TurnEvent,
    init_game,
    is_terminal,
    step,
)
from .encoder import encode  # noqa: E402
from .heuristics import HeuristicConfig, Mode, Rule, RuleMask  # noqa: E402
from .rewards import RewardConfig, base_reward, shaped_reward  # noqa: E402

__all__ = [
    "ACTIONS",
    "Action",
    "BoardState",
    "ConfigurationError",
    "ContractViolation",
    "EventKind",
    "GameConfig",
    "HeuristicConfig",
    "Mode",
    "RewardConfig",
    "Rule",
    "RuleMask",
    "TurnEvent",
    "base_reward",
    "encode",
    "init_game",
    "is_terminal",
    "shaped_reward",
    "step",
]
