"""HTTP webhook agent compatible with the public Battlesnake API (v1).

The wire frame has y pointing up; the engine has y pointing down. All
conversion happens in ``decode_wire_state`` / ``encode_wire_state``.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Mapping, Optional, TextIO

import numpy as np

from .engine import ACTIONS, MAX_HEALTH, Action, BoardState, Coord, SnakeState
from .encoder import encode
from .heuristics import (
    RULE_ORDER,
    HeuristicConfig,
    apply_mask,
    combine_masks,
    mask_for,
    mask_forbidden,
    mask_walls,
    overwrite_action,
    training_mask,
)
from .learner.network import PolicyParams, policy_forward

log = logging.getLogger(__name__)

MOVE_NAMES = {a: a.wire_name for a in ACTIONS}


class WireError(ValueError):
    """The payload does not describe a valid game state."""


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    deadline_ms: float = 400.0
    max_concurrency: int = 8
    author: str = "hillsnake"
    color: str = "#3b7d3b"
    head: str = "default"
    tail: str = "default"

    def __post_init__(self) -> None:
        if self.deadline_ms <= 0:
            raise ValueError("deadline_ms must be positive")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")


@dataclass
class WireView:
    """A wire payload in the engine frame, from the receiving snake's side."""

    game_id: str
    turn: int
    board: BoardState
    agent_id: int
    wire_ids: list[str]  # wire_ids[i] is the engine snake i + 1
    food_order: list[Coord] = field(default_factory=list)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise WireError(f"{where}: expected an integer, got {value!r}")
    return value


def _cell(raw: Any, width: int, height: int, where: str) -> Coord:
    if not isinstance(raw, Mapping):
        raise WireError(f"{where}: expected {{x, y}}")
    x = _int(raw.get("x"), f"{where}.x")
    y = _int(raw.get("y"), f"{where}.y")
    if not (0 <= x < width and 0 <= y < height):
        raise WireError(f"{where}: ({x}, {y}) outside the {width}x{height} board")
    return Coord(x, height - 1 - y)


def _facing(body: list[Coord]) -> Optional[Action]:
    head = body[0]
    for c in body[1:]:
        if c != head:
            for a in ACTIONS:
                dx, dy = a.delta
                if (c.x + dx, c.y + dy) == head:
                    return a
            return None
    return None


def _snake(raw: Any, width: int, height: int, where: str) -> tuple[str, list[Coord], int]:
    if not isinstance(raw, Mapping):
        raise WireError(f"{where}: expected an object")
    sid = raw.get("id")
    if not isinstance(sid, str):
        raise WireError(f"{where}.id: expected a string")
    health = _int(raw.get("health"), f"{where}.health")
    if not 0 <= health <= MAX_HEALTH:
        raise WireError(f"{where}.health: {health} outside [0, {MAX_HEALTH}]")
    body_raw = raw.get("body")
    if not isinstance(body_raw, list) or not body_raw:
        raise WireError(f"{where}.body: expected a non-empty list")
    body = [_cell(c, width, height, f"{where}.body[{i}]") for i, c in enumerate(body_raw)]
    if "head" in raw and _cell(raw["head"], width, height, f"{where}.head") != body[0]:
        raise WireError(f"{where}.head: does not match body[0]")
    if "length" in raw and _int(raw["length"], f"{where}.length") != len(body):
        raise WireError(f"{where}.length: does not match the body")
    return sid, body, health


def decode_wire_state(payload: Any) -> WireView:
    """Validate a move/start/end payload and convert it to the engine frame."""
    if not isinstance(payload, Mapping):
        raise WireError("payload: expected an object")
    game = payload.get("game")
    if not isinstance(game, Mapping) or not isinstance(game.get("id"), str):
        raise WireError("game.id: expected a string")
    turn = _int(payload.get("turn"), "turn")
    board = payload.get("board")
    if not isinstance(board, Mapping):
        raise WireError("board: expected an object")
    width = _int(board.get("width"), "board.width")
    height = _int(board.get("height"), "board.height")
    if width < 1 or height < 1:
        raise WireError("board: width and height must be positive")
    food_raw = board.get("food", [])
    if not isinstance(food_raw, list):
        raise WireError("board.food: expected a list")
    food = [_cell(c, width, height, f"board.food[{i}]") for i, c in enumerate(food_raw)]
    snakes_raw = board.get("snakes")
    if not isinstance(snakes_raw, list) or not snakes_raw:
        raise WireError("board.snakes: expected a non-empty list")
    snakes, wire_ids = [], []
    for i, raw in enumerate(snakes_raw):
        sid, body, health = _snake(raw, width, height, f"board.snakes[{i}]")
        if sid in wire_ids:
            raise WireError(f"board.snakes[{i}].id: duplicate id {sid!r}")
        wire_ids.append(sid)
        snakes.append(SnakeState(i + 1, body, health, True, _facing(body)))
    you = payload.get("you")
    if not isinstance(you, Mapping) or you.get("id") not in wire_ids:
        raise WireError("you.id: must name one of board.snakes")
    you_id, you_body, you_health = _snake(you, width, height, "you")
    agent_id = wire_ids.index(you_id) + 1
    mine = snakes[agent_id - 1]
    if you_body != mine.body or you_health != mine.health:
        raise WireError("you: disagrees with its entry in board.snakes")
    state = BoardState(width, height, snakes, set(food), turn)
    return WireView(game["id"], turn, state, agent_id, wire_ids, food)


def _wire_cell(c: Coord, height: int) -> dict:
    return {"x": c.x, "y": height - 1 - c.y}


def _wire_snake(s: SnakeState, wire_id: str, height: int) -> dict:
    body = [_wire_cell(c, height) for c in s.body]
    return {"id": wire_id, "health": s.health, "body": body, "head": body[0], "length": len(body)}


def encode_wire_state(view: WireView) -> dict:
    """Inverse of ``decode_wire_state`` for the fields it reads."""
    b = view.board
    food = view.food_order or sorted(b.food)
    snakes = [_wire_snake(s, view.wire_ids[s.id - 1], b.height) for s in b.snakes]
    return {
        "game": {"id": view.game_id},
        "turn": view.turn,
        "board": {
            "height": b.height,
            "width": b.width,
            "food": [_wire_cell(c, b.height) for c in food],
            "snakes": snakes,
        },
        "you": snakes[view.agent_id - 1],
    }


@dataclass
class SnakeAgent:
    """Checkpointed policy plus heuristics, as deployed behind the webhook."""

    params: PolicyParams
    heuristics: HeuristicConfig = field(default_factory=HeuristicConfig)
    # called before every policy evaluation; tests use it to inject stalls
    stall_hook: Optional[Callable[[], None]] = None

    def fits(self, board: BoardState) -> bool:
        return self.params.input_dim == board.width * board.height * 3

    def decide(self, board: BoardState, agent_id: int) -> Action:
        if self.stall_hook is not None:
            self.stall_hook()
        probs, _ = policy_forward(self.params, encode(board, agent_id))
        probs = apply_mask(probs, training_mask(board, agent_id, self.heuristics))
        action = Action(int(np.argmax(probs)))
        return overwrite_action(action, board, agent_id, self.heuristics, probs)

    def fallback(self, board: BoardState, agent_id: int) -> Action:
        """Cheap answer when the policy is late: walls, forbidden and every
        enabled rule combined; preferred action first, else the first valid
        action under a uniform prior."""
        masks = [mask_walls(board, agent_id), mask_forbidden(board, agent_id)]
        enabled = [r for r in RULE_ORDER if r in self.heuristics.rules]
        masks.append(mask_for(board, agent_id, self.heuristics, enabled))
        combined = combine_masks(masks)
        if combined.preferred is not None:
            return combined.preferred
        for valid_set in (combined.valid, masks[0].valid):
            for a in ACTIONS:
                if valid_set[a]:
                    return a
        return Action.UP


class JsonlLog:
    """Thread-safe line-delimited access log."""

    def __init__(self, stream: Optional[TextIO] = None):
        self.stream = stream
        self.records: list[dict] = []
        self._lock = threading.Lock()

    def write(self, **record: Any) -> None:
        record.setdefault("ts", round(time.time(), 6))
        with self._lock:
            self.records.append(record)
            if self.stream is not None:
                self.stream.write(json.dumps(record, sort_keys=True) + "\n")
                self.stream.flush()


class MoveService:
    """Endpoint logic without the HTTP layer: ``handle`` maps
    (method, path, body bytes) to (status, response object)."""

    def __init__(self, agent: SnakeAgent, config: ServerConfig = ServerConfig(),
                 access_log: Optional[JsonlLog] = None):
        self.agent = agent
        self.config = config
        self.log = access_log or JsonlLog()
        self.sessions: dict[str, dict] = {}
        self._sessions_lock = threading.Lock()
        self._slots = threading.BoundedSemaphore(config.max_concurrency)

    def info(self) -> dict:
        c = self.config
        return {"apiversion": "1", "author": c.author, "color": c.color, "head": c.head, "tail": c.tail}

    def handle(self, method: str, path: str, body: bytes) -> tuple[int, dict]:
        path = path.split("?", 1)[0].rstrip("/") or "/"
        if method == "GET" and path == "/":
            return 200, self.info()
        if method != "POST" or path not in ("/start", "/move", "/end"):
            return 404, {"error": f"no route for {method} {path}"}
        try:
            payload = json.loads(body.decode("utf-8"))
            view = decode_wire_state(payload)
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return 400, {"error": f"malformed JSON body: {exc}"}
        except WireError as exc:
            return 400, {"error": str(exc)}
        if path == "/start":
            with self._sessions_lock:
                self.sessions[view.game_id] = {"started": time.time(), "moves": 0}
            return 200, {}
        if path == "/end":
            with self._sessions_lock:
                session = self.sessions.pop(view.game_id, None)
            self.log.write(event="game_end", game_id=view.game_id, turn=view.turn,
                           moves=None if session is None else session["moves"])
            return 200, {}
        move, source = self.move(view)
        with self._sessions_lock:
            session = self.sessions.get(view.game_id)
            if session is not None:
                session["moves"] += 1
        return 200, {"move": MOVE_NAMES[move]}

    def move(self, view: WireView) -> tuple[Action, str]:
        """Policy action if it arrives before the deadline, else the fallback."""
        deadline = self.config.deadline_ms / 1000.0
        board, agent_id = view.board, view.agent_id
        if not self.agent.fits(board):
            self.log.write(event="board_mismatch", game_id=view.game_id, turn=view.turn)
            return self.agent.fallback(board, agent_id), "fallback"
        start = time.monotonic()
        if not self._slots.acquire(timeout=deadline * 0.5):
            self.log.write(event="busy", game_id=view.game_id, turn=view.turn)
            return self.agent.fallback(board, agent_id), "fallback"
        box: list[Action] = []
        done = threading.Event()

        def work() -> None:
            try:
                box.append(self.agent.decide(board.copy(), agent_id))
            except Exception:  # noqa: BLE001 - any policy failure falls back
                log.exception("policy evaluation failed")
            finally:
                done.set()
                self._slots.release()

        threading.Thread(target=work, daemon=True).start()
        # leave part of the budget for the fallback and the response itself
        remaining = deadline * 0.8 - (time.monotonic() - start)
        if done.wait(max(remaining, 0.0)) and box:
            return box[0], "policy"
        self.log.write(event="deadline", game_id=view.game_id, turn=view.turn,
                       waited_ms=round(1000 * (time.monotonic() - start), 3))
        return self.agent.fallback(board, agent_id), "fallback"


def _make_handler(service: MoveService) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _respond(self, method: str) -> None:
            t0 = time.monotonic()
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            status, obj = service.handle(method, self.path, body)
            data = json.dumps(obj).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            service.log.write(event="request", method=method, path=self.path, status=status,
                              ms=round(1000 * (time.monotonic() - t0), 3))

        def do_GET(self) -> None:  # noqa: N802 - http.server naming
            self._respond("GET")

        def do_POST(self) -> None:  # noqa: N802
            self._respond("POST")

        def log_message(self, format: str, *args: Any) -> None:
            pass  # the JSONL access log replaces stderr logging

    return Handler


def make_server(service: MoveService) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((service.config.host, service.config.port), _make_handler(service))
    server.daemon_threads = True
    return server


def serve(agent: SnakeAgent, config: ServerConfig = ServerConfig(),
          access_log: Optional[TextIO] = None) -> None:
    """Block serving requests until interrupted."""
    service = MoveService(agent, config, JsonlLog(access_log))
    server = make_server(service)
    host, port = server.server_address[:2]
    log.info("serving on http://%s:%s", host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
