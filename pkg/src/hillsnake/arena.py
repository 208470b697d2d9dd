"""Evaluation tournaments: free-for-all placement scoring and 1v1 round robin."""

from __future__ import annotations

import itertools
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import (
    ACTIONS,
    ELIMINATION_KINDS,
    Action,
    BoardState,
    ConfigurationError,
    EventKind,
    GameConfig,
    init_game,
    is_terminal,
    step,
    step_coord,
)
from .encoder import encode
from .heuristics import HeuristicConfig, apply_mask, overwrite_action, training_mask
from .learner.checkpoint import CheckpointError, load_checkpoint
from .learner.network import PolicyParams, policy_forward
from .learner.train import sample_actions
from .replay import Replay, header_record, turn_record

STAT_EVENTS = ("hit_wall", "forbidden_move", "starved", "killed_other")


class ArenaSetupError(ConfigurationError):
    """An agent could not be prepared; raised before any game is played."""


@dataclass
class AgentSpec:
    name: str
    kind: str = "random"  # checkpoint_policy | random | scripted
    heuristics: HeuristicConfig = field(default_factory=HeuristicConfig)
    checkpoint: Optional[str | Path] = None
    greedy: bool = False
    params: Optional[PolicyParams] = None

    def describe(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "checkpoint": None if self.checkpoint is None else str(self.checkpoint),
            "heuristics": self.heuristics.to_dict(),
            "greedy": self.greedy,
        }


def prepare_agents(agents: Sequence[AgentSpec], width: int, height: int) -> list[AgentSpec]:
    """Load checkpoints and validate every agent against the board size."""
    ready = []
    names = set()
    for spec in agents:
        if spec.name in names:
            raise ArenaSetupError(f"duplicate agent name {spec.name!r}")
        names.add(spec.name)
        if spec.kind not in ("checkpoint_policy", "random", "scripted"):
            raise ArenaSetupError(f"{spec.name}: unknown agent kind {spec.kind!r}")
        params = spec.params
        if spec.kind == "checkpoint_policy" and params is None:
            if spec.checkpoint is None:
                raise ArenaSetupError(f"{spec.name}: checkpoint_policy needs a checkpoint")
            try:
                params, meta = load_checkpoint(spec.checkpoint)
            except CheckpointError as exc:
                raise ArenaSetupError(f"{spec.name}: {exc}") from None
            board = meta.get("board")
            if board is not None and list(board) != [width, height]:
                raise ArenaSetupError(
                    f"{spec.name}: checkpoint trained on {board[0]}x{board[1]}, "
                    f"arena board is {width}x{height}"
                )
        if params is not None and params.input_dim != width * height * 3:
            raise ArenaSetupError(f"{spec.name}: policy input size does not fit the board")
        ready.append(
            AgentSpec(spec.name, spec.kind, spec.heuristics, spec.checkpoint, spec.greedy, params)
        )
    return ready


def _safe_moves(board: BoardState, agent_id: int) -> list[Action]:
    """Moves that avoid walls, reversal and body cells; when boxed in, only
    walls and reversal are avoided."""
    me = board.snake(agent_id)
    blocked = set()
    for s in board.snakes:
        if s.alive:
            blocked.update(s.body[:-1] if s.length > 1 else s.body)
    legal = [
        a for a in ACTIONS
        if (me.facing is None or a != me.facing.opposite) and board.in_bounds(step_coord(me.head, a))
    ]
    return [a for a in legal if step_coord(me.head, a) not in blocked] or legal


def action_probabilities(spec: AgentSpec, board: BoardState, agent_id: int) -> np.ndarray:
    if spec.kind == "checkpoint_policy":
        probs, _ = policy_forward(spec.params, encode(board, agent_id))
    elif spec.kind == "scripted":
        safe = _safe_moves(board, agent_id)
        probs = np.zeros(4)
        probs[safe or list(ACTIONS)] = 1.0
        probs /= probs.sum()
    else:
        probs = np.full(4, 0.25)
    return apply_mask(probs, training_mask(board, agent_id, spec.heuristics))


def choose_action(
    spec: AgentSpec, board: BoardState, agent_id: int, rng: np.random.Generator
) -> Action:
    """Policy (or baseline) distribution, in-training masks, then ad-hoc overwrite."""
    probs = action_probabilities(spec, board, agent_id)
    if spec.greedy:
        action = Action(int(np.argmax(probs)))
    else:
        action = Action(int(sample_actions(probs[None, :], rng)[0]))
    return overwrite_action(action, board, agent_id, spec.heuristics, probs)


def play_game(
    agents: Sequence[AgentSpec],
    game: GameConfig,
    max_turns: int,
    agent_seed: int,
    meta: Optional[dict] = None,
) -> Replay:
    """Agent ``i`` controls snake ``i + 1``. Returns the full replay."""
    board = init_game(game)
    rng = np.random.default_rng(agent_seed)
    header = header_record(
        game,
        {i + 1: a.describe() for i, a in enumerate(agents)},
        max_turns=max_turns,
        agent_seed=agent_seed,
        **(meta or {}),
    )
    replay = Replay(header, [turn_record(board)])
    while is_terminal(board) is None and board.turn < max_turns:
        joint = {
            s.id: choose_action(agents[s.id - 1], board, s.id, rng) for s in board.snakes if s.alive
        }
        board, events = step(board, joint, inplace=True)
        replay.turns.append(turn_record(board, joint, events))
    return replay


def _death_turns(replay: Replay) -> dict[int, Optional[int]]:
    """Turn at which each snake was eliminated; ``None`` if it never was."""
    deaths: dict[int, Optional[int]] = {sid: None for sid in replay.agents}
    for rec in replay.turns:
        for sid, kind in rec["events"]:
            if EventKind(kind) in ELIMINATION_KINDS:
                deaths[int(sid)] = rec["turn"]
    return deaths


def placement_points(deaths: dict[int, Optional[int]]) -> dict[int, float]:
    """Last survivor gets k points, next k-1, ...; simultaneous eliminations
    share the mean of the points they jointly span."""
    k = len(deaths)
    order = sorted(deaths, key=lambda s: -(float("inf") if deaths[s] is None else deaths[s]))
    points: dict[int, float] = {}
    next_points = k
    for _, group in itertools.groupby(order, key=lambda s: deaths[s]):
        group = list(group)
        span = list(range(next_points, next_points - len(group), -1))
        for sid in group:
            points[sid] = sum(span) / len(span)
        next_points -= len(group)
    return points


def event_stats(replays: Sequence[Replay]) -> dict[str, dict]:
    """Per-agent event counts and rates, keyed by agent name.

    Rates are per game played. ``forbidden_death_pct`` is forbidden-move
    deaths over all deaths (0 when the agent never died).
    """
    table: dict[str, dict] = {}
    for rep in replays:
        names = {sid: info.get("name", f"snake{sid}") for sid, info in rep.agents.items()}
        deaths = _death_turns(rep)
        final_turn = rep.turns[-1]["turn"] if rep.turns else 0
        for sid, name in names.items():
            row = table.setdefault(
                name,
                {"games": 0, "deaths": 0, "survival_turns": 0,
                 **{k: 0 for k in STAT_EVENTS}},
            )
            row["games"] += 1
            d = deaths.get(sid)
            row["survival_turns"] += final_turn if d is None else d
            row["deaths"] += d is not None
        for rec in rep.turns:
            for sid, kind in rec["events"]:
                if kind in STAT_EVENTS:
                    table[names[int(sid)]][kind] += 1
    for row in table.values():
        g = row["games"]
        for k in STAT_EVENTS:
            row[f"{k}_rate"] = row[k] / g if g else 0.0
        row["mean_episode_length"] = row.pop("survival_turns") / g if g else 0.0
        row["forbidden_death_pct"] = (
            100.0 * row["forbidden_move"] / row["deaths"] if row["deaths"] else 0.0
        )
    return dict(sorted(table.items()))


@dataclass
class ArenaResult:
    agents: list[str]
    game_points: list[dict[str, float]]
    replays: list[Replay]
    stats: dict[str, dict]

    @property
    def totals(self) -> dict[str, float]:
        return {a: sum(g[a] for g in self.game_points) for a in self.agents}

    def score_summary(self) -> dict[str, dict]:
        """Mean and per-game standard deviation (sample, ddof=1) of points."""
        out = {}
        for a in self.agents:
            pts = [g[a] for g in self.game_points]
            out[a] = {
                "total": sum(pts),
                "mean": statistics.fmean(pts),
                "std": statistics.stdev(pts) if len(pts) > 1 else 0.0,
                "placements": pts,
            }
        return out

    def report(self) -> dict:
        return {
            "mode": "ffa",
            "games": len(self.game_points),
            "scores": self.score_summary(),
            "event_stats": self.stats,
        }

    def table(self) -> str:
        rows = [f"{'agent':<20} {'score':>16} {'%forbidden':>11} {'total':>8}"]
        summary = self.score_summary()
        for a in sorted(self.agents, key=lambda n: -summary[n]["mean"]):
            s = summary[a]
            rows.append(
                f"{a:<20} {s['mean']:>7.3f} ± {s['std']:<6.3f} "
                f"{self.stats[a]['forbidden_death_pct']:>10.1f}% {s['total']:>8.1f}"
            )
        rows.append("(± is the per-game standard deviation)")
        return "\n".join(rows)


@dataclass
class OneVsOneResult:
    agents: list[str]
    matrix: np.ndarray  # matrix[i, j]: points of agent i against agent j; NaN on the diagonal
    replays: list[Replay]
    games_per_pair: int

    @property
    def n_games(self) -> int:
        return len(self.replays)

    def report(self) -> dict:
        return {
            "mode": "1v1",
            "games": self.n_games,
            "games_per_pair": self.games_per_pair,
            "agents": self.agents,
            "matrix": [[None if np.isnan(v) else float(v) for v in row] for row in self.matrix],
            "totals": {a: float(np.nansum(self.matrix[i])) for i, a in enumerate(self.agents)},
            "event_stats": event_stats(self.replays),
        }

    def table(self) -> str:
        w = max(8, *(len(a) for a in self.agents))
        rows = [" " * w + " " + " ".join(f"{a:>{w}}" for a in self.agents) + f" {'total':>{w}}"]
        for i, a in enumerate(self.agents):
            cells = ["-".rjust(w) if i == j else f"{self.matrix[i, j]:>{w}.1f}"
                     for j in range(len(self.agents))]
            rows.append(f"{a:<{w}} " + " ".join(cells) + f" {np.nansum(self.matrix[i]):>{w}.1f}")
        return "\n".join(rows)


def _game_seeds(seed: int, tag: int, index: int) -> tuple[int, int]:
    state = np.random.SeedSequence([seed, tag, index]).generate_state(2, np.uint64)
    return int(state[0] >> np.uint64(1)), int(state[1])


def _run_jobs(jobs: list[tuple], parallelism: int) -> list[Replay]:
    if parallelism <= 1 or len(jobs) <= 1:
        return [play_game(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(play_game, *zip(*jobs)))


def run_ffa(
    agents: Sequence[AgentSpec],
    n_games: int,
    game: GameConfig = GameConfig(),
    max_turns: int = 1000,
    seed: int = 0,
    parallelism: int = 1,
) -> ArenaResult:
    """All agents on one board for ``n_games`` games.

    ``game`` supplies board size, initial length and food rate; its snake
    count and seed are replaced per game.
    """
    if len(agents) < 2:
        raise ArenaSetupError("an FFA needs at least two agents")
    if n_games < 1:
        raise ArenaSetupError("n_games must be >= 1")
    ready = prepare_agents(agents, game.width, game.height)
    jobs = []
    for g in range(n_games):
        game_seed, agent_seed = _game_seeds(seed, 0, g)
        cfg = GameConfig(game.width, game.height, len(ready), game.initial_length,
                         game.food_spawn_probability, game_seed)
        jobs.append((ready, cfg, max_turns, agent_seed, {"mode": "ffa", "game_index": g}))
    replays = _run_jobs(jobs, parallelism)
    names = [a.name for a in ready]
    game_points = []
    for rep in replays:
        pts = placement_points(_death_turns(rep))
        game_points.append({names[sid - 1]: p for sid, p in pts.items()})
    return ArenaResult(names, game_points, replays, event_stats(replays))


def run_1v1(
    agents: Sequence[AgentSpec],
    games_per_pair: int,
    game: GameConfig = GameConfig(),
    max_turns: int = 1000,
    seed: int = 0,
    parallelism: int = 1,
) -> OneVsOneResult:
    """Round robin over unordered pairs; win 1 point, draw or timeout 0.5 each."""
    if len(agents) < 2:
        raise ArenaSetupError("a 1v1 tournament needs at least two agents")
    if games_per_pair < 1:
        raise ArenaSetupError("games_per_pair must be >= 1")
    ready = prepare_agents(agents, game.width, game.height)
    n = len(ready)
    jobs, pairs = [], []
    index = 0
    for i, j in itertools.combinations(range(n), 2):
        for g in range(games_per_pair):
            game_seed, agent_seed = _game_seeds(seed, 1, index)
            cfg = GameConfig(game.width, game.height, 2, game.initial_length,
                             game.food_spawn_probability, game_seed)
            meta = {"mode": "1v1", "game_index": index, "pair": [ready[i].name, ready[j].name]}
            jobs.append(([ready[i], ready[j]], cfg, max_turns, agent_seed, meta))
            pairs.append((i, j))
            index += 1
    replays = _run_jobs(jobs, parallelism)
    matrix = np.zeros((n, n))
    np.fill_diagonal(matrix, np.nan)
    for (i, j), rep in zip(pairs, replays):
        pts = one_vs_one_points(rep)
        matrix[i, j] += pts[1]
        matrix[j, i] += pts[2]
    return OneVsOneResult([a.name for a in ready], matrix, replays, games_per_pair)


def one_vs_one_points(replay: Replay) -> dict[int, float]:
    deaths = _death_turns(replay)
    alive = [sid for sid, d in deaths.items() if d is None]
    if len(alive) == 1:
        return {sid: 1.0 if sid == alive[0] else 0.0 for sid in deaths}
    return {sid: 0.5 for sid in deaths}


def format_stats(stats: dict[str, dict]) -> str:
    """Human-readable version of an ``event_stats`` table."""
    cols = ("games", "deaths", *STAT_EVENTS, "mean_episode_length", "forbidden_death_pct")
    heads = ("games", "deaths", "wall", "forbidden", "starved", "kills", "mean_len", "%forbidden")
    w = max([5, *(len(n) for n in stats)])
    rows = [f"{'agent':<{w}} " + " ".join(f"{h:>10}" for h in heads)]
    for name, row in stats.items():
        cells = [f"{row[c]:>10.2f}" if isinstance(row[c], float) else f"{row[c]:>10}" for c in cols]
        rows.append(f"{name:<{w}} " + " ".join(cells))
    return "\n".join(rows)
