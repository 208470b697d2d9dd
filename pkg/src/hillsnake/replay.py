"""Line-delimited JSON replays.

A replay is a header record followed by one record per board state. The
record for turn 0 carries no actions or events; every later record holds the
joint actions and events that produced it. Serialization is canonical
(sorted keys, fixed separators) so identical games give identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .engine import Action, BoardState, Coord, EventKind, GameConfig, SnakeState, TurnEvent

FORMAT_VERSION = 1


class ReplayError(ValueError):
    """A replay record could not be parsed."""


def dumps(record: Mapping) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def header_record(config: GameConfig, agents: Optional[Mapping[int, dict]] = None, **meta) -> dict:
    return {
        "type": "header",
        "version": FORMAT_VERSION,
        "config": config.to_dict(),
        "agents": {str(k): v for k, v in (agents or {}).items()},
        **meta,
    }


def turn_record(
    board: BoardState,
    actions: Optional[Mapping[int, Action]] = None,
    events: Iterable[TurnEvent] = (),
) -> dict:
    rec = board.snapshot()
    rec["type"] = "turn"
    rec["actions"] = {str(k): int(v) for k, v in sorted((actions or {}).items())}
    rec["events"] = [[e.agent_id, e.kind.value] for e in events]
    return rec


@dataclass
class Replay:
    header: dict
    turns: list[dict] = field(default_factory=list)

    @property
    def config(self) -> GameConfig:
        return GameConfig(**self.header["config"])

    @property
    def agents(self) -> dict[int, dict]:
        return {int(k): v for k, v in self.header.get("agents", {}).items()}

    def records(self) -> list[dict]:
        return [self.header, *self.turns]

    def to_text(self) -> str:
        return "".join(dumps(r) + "\n" for r in self.records())

    def events(self) -> list[list[TurnEvent]]:
        return [
            [TurnEvent(int(a), EventKind(k)) for a, k in rec["events"]] for rec in self.turns
        ]

    def board_at(self, index: int) -> BoardState:
        """Board reconstructed from the ``index``-th turn record (RNG not restored)."""
        rec = self.turns[index]
        cfg = self.config
        snakes = [
            SnakeState(
                id=s["id"],
                body=[Coord(x, y) for x, y in s["body"]],
                health=s["health"],
                alive=s["alive"],
                facing=None if s["facing"] is None else Action(s["facing"]),
            )
            for s in rec["snakes"]
        ]
        return BoardState(
            cfg.width,
            cfg.height,
            snakes,
            {Coord(x, y) for x, y in rec["food"]},
            rec["turn"],
            cfg.food_spawn_probability,
        )


def parse_lines(lines: Iterable[str], source: str = "<replay>") -> Replay:
    header = None
    turns = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ReplayError(f"{source}: line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or "type" not in rec:
            raise ReplayError(f"{source}: line {lineno}: record is not a typed object")
        if rec["type"] == "header":
            if header is not None:
                raise ReplayError(f"{source}: line {lineno}: duplicate header")
            if "config" not in rec:
                raise ReplayError(f"{source}: line {lineno}: header without config")
            header = rec
        elif rec["type"] == "turn":
            if header is None:
                raise ReplayError(f"{source}: line {lineno}: turn record before header")
            missing = {"turn", "snakes", "food", "actions", "events"} - rec.keys()
            if missing:
                raise ReplayError(
                    f"{source}: line {lineno}: turn record missing {sorted(missing)}"
                )
            try:
                for _, kind in rec["events"]:
                    EventKind(kind)
            except (ValueError, TypeError):
                raise ReplayError(f"{source}: line {lineno}: malformed events") from None
            turns.append(rec)
        else:
            raise ReplayError(f"{source}: line {lineno}: unknown record type {rec['type']!r}")
    if header is None:
        raise ReplayError(f"{source}: no header record")
    return Replay(header, turns)


def read_replay(path: str | Path) -> Replay:
    path = Path(path)
    with path.open() as fh:
        return parse_lines(fh, str(path))


def write_replay(replay: Replay, path: str | Path) -> None:
    Path(path).write_text(replay.to_text())


def render_board(board: BoardState) -> str:
    """ASCII frame: ``*`` food, ``A``/``a`` head/body of snake 1, ``B``/``b``
    for snake 2 and so on; eliminated snakes are not drawn."""
    grid = [["." for _ in range(board.width)] for _ in range(board.height)]
    for c in board.food:
        grid[c.y][c.x] = "*"
    for s in board.snakes:
        if not s.alive:
            continue
        letter = chr(ord("a") + (s.id - 1) % 26)
        for c in reversed(s.body):
            grid[c.y][c.x] = letter
        grid[s.head.y][s.head.x] = letter.upper()
    return "\n".join("".join(row) for row in grid)


def render_frames(replay: Replay) -> list[str]:
    """One frame per turn record, with its turn number, actions and events."""
    frames = []
    for i, rec in enumerate(replay.turns):
        board = replay.board_at(i)
        status = "  ".join(
            f"{chr(ord('A') + (s.id - 1) % 26)}:{s.health if s.alive else 'x'}" for s in board.snakes
        )
        lines = [f"turn {rec['turn']}  {status}", render_board(board)]
        if rec["actions"]:
            moves = " ".join(f"{k}={Action(v).wire_name}" for k, v in rec["actions"].items())
            lines.append(f"moves: {moves}")
        if rec["events"]:
            lines.append("events: " + ", ".join(f"{a}:{k}" for a, k in rec["events"]))
        frames.append("\n".join(lines))
    return frames
