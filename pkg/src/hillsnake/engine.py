"""Deterministic Battlesnake rules engine.

Coordinates are board-local with the origin in the top-left corner: ``up``
decreases ``y`` and ``down`` increases it. Every game owns its own
``random.Random`` so separate games never share RNG state.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional


class ConfigurationError(ValueError):
    """Raised for invalid game, reward, heuristic or training configuration."""


class ContractViolation(ValueError):
    """Raised when an operation is called outside its preconditions."""


class Coord(NamedTuple):
    x: int
    y: int


class Action(enum.IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def opposite(self) -> "Action":
        return _OPPOSITE[self]

    @property
    def delta(self) -> tuple[int, int]:
        return DELTAS[self]

    @property
    def wire_name(self) -> str:
        return self.name.lower()


ACTIONS = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)
DELTAS = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}
_OPPOSITE = {
    Action.UP: Action.DOWN,
    Action.DOWN: Action.UP,
    Action.LEFT: Action.RIGHT,
    Action.RIGHT: Action.LEFT,
}

MAX_HEALTH = 100


class EventKind(str, enum.Enum):
    ATE_FOOD = "ate_food"
    HIT_WALL = "hit_wall"
    HIT_SELF = "hit_self"
    HIT_OTHER_BODY = "hit_other_body"
    FORBIDDEN_MOVE = "forbidden_move"
    HEAD_TO_HEAD_LOSS = "head_to_head_loss"
    HEAD_TO_HEAD_MUTUAL = "head_to_head_mutual"
    STARVED = "starved"
    KILLED_OTHER = "killed_other"
    SURVIVED_TURN = "survived_turn"
    WON = "won"


ELIMINATION_KINDS = frozenset(
    {
        EventKind.HIT_WALL,
        EventKind.HIT_SELF,
        EventKind.HIT_OTHER_BODY,
        EventKind.FORBIDDEN_MOVE,
        EventKind.HEAD_TO_HEAD_LOSS,
        EventKind.HEAD_TO_HEAD_MUTUAL,
        EventKind.STARVED,
    }
)


class TurnEvent(NamedTuple):
    agent_id: int
    kind: EventKind


def step_coord(c: Coord, action: Action) -> Coord:
    dx, dy = DELTAS[action]
    return Coord(c.x + dx, c.y + dy)


@dataclass
class SnakeState:
    id: int
    body: list[Coord]
    health: int = MAX_HEALTH
    alive: bool = True
    facing: Optional[Action] = None

    @property
    def head(self) -> Coord:
        return self.body[0]

    @property
    def length(self) -> int:
        return len(self.body)

    def copy(self) -> "SnakeState":
        return SnakeState(self.id, list(self.body), self.health, self.alive, self.facing)


@dataclass(frozen=True)
class GameConfig:
    width: int = 11
    height: int = 11
    n_snakes: int = 5
    initial_length: int = 3
    food_spawn_probability: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_snakes < 2:
            raise ConfigurationError(f"n_snakes must be >= 2, got {self.n_snakes}")
        if self.width < 5 or self.height < 5:
            raise ConfigurationError(
                f"board must be at least 5x5, got {self.width}x{self.height}"
            )
        if not 0.0 <= self.food_spawn_probability <= 1.0:
            raise ConfigurationError(
                f"food_spawn_probability must lie in [0, 1], got {self.food_spawn_probability}"
            )
        if self.initial_length < 1:
            raise ConfigurationError(f"initial_length must be >= 1, got {self.initial_length}")
        if not -(2**63) <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in 64 bits")

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "n_snakes": self.n_snakes,
            "initial_length": self.initial_length,
            "food_spawn_probability": self.food_spawn_probability,
            "seed": self.seed,
        }


@dataclass
class BoardState:
    width: int
    height: int
    snakes: list[SnakeState]
    food: set[Coord]
    turn: int = 0
    food_spawn_probability: float = 0.15
    rng: random.Random = field(default_factory=random.Random, repr=False, compare=False)

    def in_bounds(self, c: Coord) -> bool:
        return 0 <= c.x < self.width and 0 <= c.y < self.height

    def snake(self, agent_id: int) -> SnakeState:
        for s in self.snakes:
            if s.id == agent_id:
                return s
        raise ContractViolation(f"unknown agent id {agent_id}")

    @property
    def living(self) -> list[SnakeState]:
        return [s for s in self.snakes if s.alive]

    def occupied(self) -> set[Coord]:
        cells: set[Coord] = set()
        for s in self.snakes:
            if s.alive:
                cells.update(s.body)
        return cells

    def free_cells(self) -> list[Coord]:
        """Cells holding neither food nor a living snake, in row-major order."""
        blocked = self.occupied() | self.food
        return [
            Coord(x, y)
            for y in range(self.height)
            for x in range(self.width)
            if (x, y) not in blocked
        ]

    def copy(self) -> "BoardState":
        rng = random.Random()
        rng.setstate(self.rng.getstate())
        return BoardState(
            self.width,
            self.height,
            [s.copy() for s in self.snakes],
            set(self.food),
            self.turn,
            self.food_spawn_probability,
            rng,
        )

    def snapshot(self) -> dict:
        """Plain-data view of the board, used by replays and equality checks."""
        return {
            "turn": self.turn,
            "snakes": [
                {
                    "id": s.id,
                    "body": [[c.x, c.y] for c in s.body],
                    "health": s.health,
                    "alive": s.alive,
                    "facing": None if s.facing is None else int(s.facing),
                }
                for s in self.snakes
            ],
            "food": sorted([c.x, c.y] for c in self.food),
        }


@dataclass(frozen=True)
class GameOutcome:
    winner: Optional[int]

    @property
    def draw(self) -> bool:
        return self.winner is None


def boundary_cells(width: int, height: int) -> list[Coord]:
    return [
        Coord(x, y)
        for y in range(height)
        for x in range(width)
        if x in (0, width - 1) or y in (0, height - 1)
    ]


def init_game(config: GameConfig) -> BoardState:
    edge = boundary_cells(config.width, config.height)
    if config.n_snakes > len(edge) or config.n_snakes + 1 > config.width * config.height:
        raise ConfigurationError(
            f"cannot place {config.n_snakes} snakes on {len(edge)} boundary cells "
            f"of a {config.width}x{config.height} board"
        )
    rng = random.Random(config.seed)
    spawns = rng.sample(edge, config.n_snakes)
    snakes = [
        SnakeState(id=i + 1, body=[spawn] * config.initial_length)
        for i, spawn in enumerate(spawns)
    ]
    board = BoardState(
        config.width,
        config.height,
        snakes,
        set(),
        0,
        config.food_spawn_probability,
        rng,
    )
    board.food.add(rng.choice(board.free_cells()))
    return board


def is_terminal(board: BoardState) -> Optional[GameOutcome]:
    living = board.living
    if len(living) >= 2:
        return None
    return GameOutcome(living[0].id if living else None)


def _eliminate(snake: SnakeState, kind: EventKind, events: list[TurnEvent]) -> None:
    snake.alive = False
    events.append(TurnEvent(snake.id, kind))


def step(
    board: BoardState,
    joint_actions: Mapping[int, Action | int],
    *,
    inplace: bool = False,
) -> tuple[BoardState, list[TurnEvent]]:
    """Advance the game by one simultaneous turn.

    Resolution order: health decay, forbidden-move check, movement, feeding,
    eliminations against post-move positions, food spawn, bookkeeping.
    """
    if is_terminal(board) is not None:
        raise ContractViolation("step called on a terminal board")
    living_ids = {s.id for s in board.snakes if s.alive}
    if set(joint_actions) != living_ids:
        raise ContractViolation(
            f"expected actions for {sorted(living_ids)}, got {sorted(joint_actions)}"
        )
    if not inplace:
        board = board.copy()
    actions = {k: Action(v) for k, v in joint_actions.items()}
    events: list[TurnEvent] = []
    movers = [s for s in board.snakes if s.alive]

    for s in movers:
        s.health -= 1

    moved = []
    for s in movers:
        if s.facing is not None and actions[s.id] == s.facing.opposite:
            _eliminate(s, EventKind.FORBIDDEN_MOVE, events)
        else:
            moved.append(s)

    for s in moved:
        s.body.insert(0, step_coord(s.body[0], actions[s.id]))
        s.body.pop()

    for s in moved:
        if s.body[0] in board.food:
            board.food.discard(s.body[0])
            s.health = MAX_HEALTH
            s.body.append(s.body[-1])
            events.append(TurnEvent(s.id, EventKind.ATE_FOOD))

    bodies = {}
    for s in moved:
        for c in s.body[1:]:
            bodies.setdefault(c, set()).add(s.id)
    heads: dict[Coord, list[SnakeState]] = {}
    for s in moved:
        heads.setdefault(s.body[0], []).append(s)

    causes: dict[int, EventKind] = {}
    kills: list[int] = []
    for s in moved:
        head = s.body[0]
        if not board.in_bounds(head):
            causes[s.id] = EventKind.HIT_WALL
            continue
        owners = bodies.get(head, ())
        if s.id in owners:
            causes[s.id] = EventKind.HIT_SELF
            continue
        if owners:
            causes[s.id] = EventKind.HIT_OTHER_BODY
            continue
        rivals = [o for o in heads[head] if o is not s]
        if rivals:
            longest = max(o.length for o in rivals)
            if longest > s.length:
                causes[s.id] = EventKind.HEAD_TO_HEAD_LOSS
                continue
            if longest == s.length:
                causes[s.id] = EventKind.HEAD_TO_HEAD_MUTUAL
                continue
            kills.extend(s.id for _ in rivals)
        if s.health <= 0:
            causes[s.id] = EventKind.STARVED
    for s in moved:
        if s.id in causes:
            _eliminate(s, causes[s.id], events)
    events.extend(TurnEvent(sid, EventKind.KILLED_OTHER) for sid in kills)

    _spawn_food(board)

    board.turn += 1
    survivors = [s for s in moved if s.alive]
    for s in survivors:
        s.facing = actions[s.id]
        events.append(TurnEvent(s.id, EventKind.SURVIVED_TURN))
    if len(survivors) == 1:
        events.append(TurnEvent(survivors[0].id, EventKind.WON))
    return board, events


def _spawn_food(board: BoardState) -> None:
    # one uniform draw every turn keeps the RNG stream independent of board contents
    roll = board.rng.random()
    if board.food and roll >= board.food_spawn_probability:
        return
    free = board.free_cells()
    if free:
        board.food.add(board.rng.choice(free))


def events_for(events: Iterable[TurnEvent], agent_id: int) -> list[EventKind]:
    return [e.kind for e in events if e.agent_id == agent_id]
