"""Base rewards and event-driven shaping terms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .engine import ELIMINATION_KINDS, ConfigurationError, EventKind, TurnEvent

SURVIVE_BONUS = 0.002


@dataclass(frozen=True)
class RewardConfig:
    survive_bonus: float = SURVIVE_BONUS
    death_penalty: float = -1.0
    win_reward: float = 1.0
    shaping_terms: Mapping[EventKind, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        terms = {}
        for kind, value in dict(self.shaping_terms).items():
            try:
                terms[EventKind(kind)] = float(value)
            except ValueError:
                raise ConfigurationError(f"unknown shaping event kind {kind!r}") from None
        object.__setattr__(self, "shaping_terms", terms)

    def with_terms(self, extra: Mapping[EventKind, float]) -> "RewardConfig":
        """Copy with ``extra`` added on top of the existing shaping terms."""
        terms = dict(self.shaping_terms)
        for kind, value in extra.items():
            terms[EventKind(kind)] = terms.get(EventKind(kind), 0.0) + value
        return RewardConfig(self.survive_bonus, self.death_penalty, self.win_reward, terms)

    def to_dict(self) -> dict:
        return {
            "survive_bonus": self.survive_bonus,
            "death_penalty": self.death_penalty,
            "win_reward": self.win_reward,
            "shaping_terms": {k.value: v for k, v in sorted(self.shaping_terms.items())},
        }


def base_reward(
    events: Iterable[TurnEvent], agent_id: int, config: RewardConfig = RewardConfig()
) -> float:
    """Precedence: death, then win, then the per-turn survival bonus."""
    kinds = {e.kind for e in events if e.agent_id == agent_id}
    if kinds & ELIMINATION_KINDS:
        return config.death_penalty
    if EventKind.WON in kinds:
        return config.win_reward
    if EventKind.SURVIVED_TURN in kinds:
        return config.survive_bonus
    return 0.0


def shaped_reward(
    base: float, events: Iterable[TurnEvent], agent_id: int, config: RewardConfig
) -> float:
    terms = config.shaping_terms
    if not terms:
        return base
    total = base
    for e in events:
        if e.agent_id == agent_id and e.kind in terms:
            total += terms[e.kind]
    return total


def reward(events: list[TurnEvent], agent_id: int, config: RewardConfig) -> float:
    return shaped_reward(base_reward(events, agent_id, config), events, agent_id, config)
