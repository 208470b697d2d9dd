"""Human-engineered rules and the three ways of injecting them.

Rules 1 and 2 (walls, forbidden moves) prevent actions by zeroing mask
entries. Rules 3 and 4 (food when hungry, head-to-head kills) promote an
action through ``RuleMask.preferred`` and never remove options.
"""

from __future__ import annotations

import bisect
import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .engine import (
    ACTIONS,
    Action,
    BoardState,
    ConfigurationError,
    Coord,
    EventKind,
    step_coord,
)

N_ACTIONS = 4


class Rule(str, enum.Enum):
    WALLS = "rule1_walls"
    FORBIDDEN = "rule2_forbidden"
    FOOD = "rule3_food"
    KILL = "rule4_kill"


PREVENTION_RULES = frozenset({Rule.WALLS, Rule.FORBIDDEN})
RULE_ORDER = (Rule.WALLS, Rule.FORBIDDEN, Rule.FOOD, Rule.KILL)

# event each rule targets when used for reward shaping; sign follows prevention/promotion
RULE_EVENTS = {
    Rule.WALLS: EventKind.HIT_WALL,
    Rule.FORBIDDEN: EventKind.FORBIDDEN_MOVE,
    Rule.FOOD: EventKind.ATE_FOOD,
    Rule.KILL: EventKind.KILLED_OTHER,
}


class Mode(str, enum.Enum):
    IN_TRAINING_MASK = "in_training_mask"
    AD_HOC_OVERWRITE = "ad_hoc_overwrite"
    REWARD_SHAPING = "reward_shaping"


@dataclass(frozen=True)
class RuleMask:
    valid: tuple[int, int, int, int] = (1, 1, 1, 1)
    preferred: Optional[Action] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "valid", tuple(int(v) for v in self.valid))
        if len(self.valid) != N_ACTIONS or any(v not in (0, 1) for v in self.valid):
            raise ValueError(f"valid must be four 0/1 entries, got {self.valid}")
        if self.preferred is not None:
            object.__setattr__(self, "preferred", Action(self.preferred))
            if not self.valid[self.preferred]:
                raise ValueError("preferred action must be valid")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.valid, dtype=np.int8)


ALL_VALID = RuleMask()


@dataclass(frozen=True)
class HeuristicConfig:
    """Enabled rules with their injection mode.

    ``schedule`` maps a training step to per-rule weights; the latest entry at
    or before the current step applies, and rules missing from it keep
    weight 1.
    """

    rules: Mapping[Rule, Mode] = field(default_factory=dict)
    health_threshold: int = 30
    shaping_magnitude: float = 0.4
    schedule: Optional[Mapping[int, Mapping[Rule, float]]] = None

    def __post_init__(self) -> None:
        if not 1 <= self.health_threshold <= 100:
            raise ConfigurationError(
                f"health_threshold must lie in [1, 100], got {self.health_threshold}"
            )
        rules = {}
        for r, m in dict(self.rules).items():
            try:
                rule, mode = Rule(r), Mode(m)
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from None
            if mode is Mode.IN_TRAINING_MASK and rule not in PREVENTION_RULES:
                raise ConfigurationError(
                    f"{rule.value} promotes actions and cannot be used as an in-training mask"
                )
            rules[rule] = mode
        object.__setattr__(self, "rules", rules)
        if self.schedule is not None:
            sched = {}
            for stepno, weights in dict(self.schedule).items():
                ws = {}
                for r, w in dict(weights).items():
                    if not 0.0 <= float(w) <= 1.0:
                        raise ConfigurationError(f"schedule weight {w} outside [0, 1]")
                    ws[Rule(r)] = float(w)
                sched[int(stepno)] = ws
            object.__setattr__(self, "schedule", dict(sorted(sched.items())))

    def weight(self, rule: Rule, training_step: Optional[int] = None) -> float:
        """Scheduled weight; ``training_step=None`` (inference) uses the last entry."""
        if not self.schedule:
            return 1.0
        steps = list(self.schedule)
        if training_step is None:
            return self.schedule[steps[-1]].get(rule, 1.0)
        i = bisect.bisect_right(steps, training_step) - 1
        if i < 0:
            return 1.0
        return self.schedule[steps[i]].get(rule, 1.0)

    def rules_in_mode(self, mode: Mode) -> list[Rule]:
        return [r for r in RULE_ORDER if self.rules.get(r) is mode]

    def shaping_terms(self, training_step: Optional[int] = None) -> dict[EventKind, float]:
        """Reward terms for rules in reward-shaping mode.

        A scheduled weight of 0.5 or less switches a term off, matching how
        masks treat the same weight.
        """
        terms = {}
        for rule in self.rules_in_mode(Mode.REWARD_SHAPING):
            if self.weight(rule, training_step) <= 0.5:
                continue
            sign = -1.0 if rule in PREVENTION_RULES else 1.0
            terms[RULE_EVENTS[rule]] = sign * self.shaping_magnitude
        return terms

    def to_dict(self) -> dict:
        return {
            "rules": {r.value: m.value for r, m in self.rules.items()},
            "health_threshold": self.health_threshold,
            "shaping_magnitude": self.shaping_magnitude,
            "schedule": None
            if self.schedule is None
            else {str(k): {r.value: w for r, w in v.items()} for k, v in self.schedule.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "HeuristicConfig":
        data = dict(data)
        unknown = set(data) - {"rules", "health_threshold", "shaping_magnitude", "schedule"}
        if unknown:
            raise ConfigurationError(f"unknown heuristic fields {sorted(unknown)}")
        return cls(**data)


def mask_walls(board: BoardState, agent_id: int) -> RuleMask:
    head = board.snake(agent_id).head
    return RuleMask(tuple(int(board.in_bounds(step_coord(head, a))) for a in ACTIONS))


def mask_forbidden(board: BoardState, agent_id: int) -> RuleMask:
    facing = board.snake(agent_id).facing
    if facing is None:
        return ALL_VALID
    return RuleMask(tuple(int(a != facing.opposite) for a in ACTIONS))


def _blocked_cells(board: BoardState) -> set[Coord]:
    # every living body segment, tails included, counts as an obstacle
    return board.occupied()


def food_distances(board: BoardState, blocked: set[Coord]) -> dict[Coord, int]:
    """Multi-source BFS distance from every reachable free cell to its nearest food."""
    dist: dict[Coord, int] = {}
    queue: deque[Coord] = deque()
    for f in sorted(board.food):
        if f not in blocked:
            dist[f] = 0
            queue.append(f)
    while queue:
        c = queue.popleft()
        for a in ACTIONS:
            n = step_coord(c, a)
            if n in dist or n in blocked or not board.in_bounds(n):
                continue
            dist[n] = dist[c] + 1
            queue.append(n)
    return dist


def promote_food(board: BoardState, agent_id: int, health_threshold: int = 30) -> RuleMask:
    snake = board.snake(agent_id)
    if snake.health >= health_threshold or not board.food:
        return ALL_VALID
    dist = food_distances(board, _blocked_cells(board))
    best, best_d = None, None
    for a in ACTIONS:
        d = dist.get(step_coord(snake.head, a))
        if d is not None and (best_d is None or d < best_d):
            best, best_d = a, d
    return RuleMask(preferred=best)


def promote_kill(board: BoardState, agent_id: int) -> RuleMask:
    """Step next to a strictly shorter enemy head two cells away.

    If the enemy then moves onto that cell the head-to-head is won. Cells
    occupied by a snake body are never proposed.
    """
    me = board.snake(agent_id)
    head = me.head
    blocked = _blocked_cells(board)
    for a in ACTIONS:
        target = step_coord(head, a)
        if not board.in_bounds(target) or target in blocked:
            continue
        for other in board.snakes:
            if other.id == agent_id or not other.alive or other.length >= me.length:
                continue
            oh = other.head
            if abs(oh.x - head.x) + abs(oh.y - head.y) != 2:
                continue
            if abs(oh.x - target.x) + abs(oh.y - target.y) == 1:
                return RuleMask(preferred=a)
    return ALL_VALID


def combine_masks(masks: Sequence[RuleMask]) -> RuleMask:
    if not masks:
        raise ValueError("combine_masks needs at least one mask")
    valid = tuple(int(all(m.valid[i] for m in masks)) for i in range(N_ACTIONS))
    preferred = next(
        (m.preferred for m in masks if m.preferred is not None and valid[m.preferred]), None
    )
    return RuleMask(valid, preferred)


def apply_mask(action_probabilities: Sequence[float], mask: RuleMask) -> np.ndarray:
    probs = np.asarray(action_probabilities, dtype=float)
    valid = mask.array.astype(bool)
    if not valid.any():
        return probs.copy()
    out = np.where(valid, probs, 0.0)
    total = out.sum()
    if total <= 0.0:
        # all mass sat on masked actions; spread uniformly over the valid ones
        return valid / valid.sum()
    return out / total


def apply_schedule(mask: RuleMask, weight: float) -> Optional[RuleMask]:
    """Blend a rule's mask toward all-ones; ``None`` means the rule is switched off."""
    if weight >= 1.0:
        return mask
    valid = tuple(int(v * weight + (1.0 - weight) >= 0.5) for v in mask.valid)
    if all(valid) and weight <= 0.5:
        return None
    preferred = mask.preferred if mask.preferred is not None and valid[mask.preferred] else None
    return RuleMask(valid, preferred)


def rule_mask(rule: Rule, board: BoardState, agent_id: int, config: HeuristicConfig) -> RuleMask:
    if rule is Rule.WALLS:
        return mask_walls(board, agent_id)
    if rule is Rule.FORBIDDEN:
        return mask_forbidden(board, agent_id)
    if rule is Rule.FOOD:
        return promote_food(board, agent_id, config.health_threshold)
    return promote_kill(board, agent_id)


def mask_for(
    board: BoardState,
    agent_id: int,
    config: HeuristicConfig,
    rules: Sequence[Rule],
    training_step: Optional[int] = None,
) -> RuleMask:
    masks = []
    for rule in rules:
        m = apply_schedule(
            rule_mask(rule, board, agent_id, config), config.weight(rule, training_step)
        )
        if m is not None:
            masks.append(m)
    return combine_masks(masks) if masks else ALL_VALID


def training_mask(
    board: BoardState, agent_id: int, config: HeuristicConfig, training_step: Optional[int] = None
) -> RuleMask:
    return mask_for(
        board, agent_id, config, config.rules_in_mode(Mode.IN_TRAINING_MASK), training_step
    )


def overwrite_action(
    policy_action: Action | int,
    board: BoardState,
    agent_id: int,
    config: HeuristicConfig,
    action_probabilities: Optional[Sequence[float]] = None,
) -> Action:
    """Replace the policy's action using the ad-hoc rules of ``config``.

    Without ``action_probabilities`` the fallback among valid actions is the
    lowest action index.
    """
    policy_action = Action(policy_action)
    rules = config.rules_in_mode(Mode.AD_HOC_OVERWRITE)
    if not rules:
        return policy_action
    mask = mask_for(board, agent_id, config, rules)
    if mask.preferred is not None:
        return mask.preferred
    if mask.valid[policy_action]:
        return policy_action
    if not any(mask.valid):
        return policy_action
    probs = (
        np.full(N_ACTIONS, 1.0 / N_ACTIONS)
        if action_probabilities is None
        else np.asarray(action_probabilities, dtype=float)
    )
    candidates = [a for a in ACTIONS if mask.valid[a]]
    return max(candidates, key=lambda a: (probs[a], -int(a)))
