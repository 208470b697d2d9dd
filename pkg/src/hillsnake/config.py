"""Run configuration files (JSON or YAML) and their typed views."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .engine import ConfigurationError, GameConfig
from .heuristics import HeuristicConfig
from .learner.ppo import PPOConfig
from .rewards import RewardConfig

ENV_PREFIX = "HILLSNAKE_"


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 10
    n_envs: int = 1
    max_turns: int = 1000
    seed: int = 0
    share_parameters: bool = False
    checkpoint_every: int = 0  # 0: only the final iteration
    max_env_steps: Optional[int] = None

    def __post_init__(self) -> None:
        if self.iterations < 1 or self.n_envs < 1 or self.max_turns < 1:
            raise ConfigurationError("iterations, n_envs and max_turns must be >= 1")


@dataclass(frozen=True)
class AgentEntry:
    name: str
    kind: str = "random"
    checkpoint: Optional[str] = None
    heuristics: HeuristicConfig = field(default_factory=HeuristicConfig)
    greedy: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("checkpoint_policy", "random", "scripted"):
            raise ConfigurationError(f"agents.{self.name}.kind: unknown kind {self.kind!r}")
        if self.kind == "checkpoint_policy" and not self.checkpoint:
            raise ConfigurationError(f"agents.{self.name}.checkpoint: required for checkpoint_policy")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "checkpoint": self.checkpoint,
            "heuristics": self.heuristics.to_dict(),
            "greedy": self.greedy,
        }


@dataclass(frozen=True)
class ArenaConfig:
    agents: tuple[AgentEntry, ...] = ()
    ffa_games: int = 0
    games_per_pair: int = 0
    max_turns: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.ffa_games < 0 or self.games_per_pair < 0:
            raise ConfigurationError("arena game counts must be >= 0")


@dataclass(frozen=True)
class ServeConfig:
    checkpoint: Optional[str] = None
    heuristics: HeuristicConfig = field(default_factory=HeuristicConfig)
    host: str = "127.0.0.1"
    port: int = 8000
    deadline_ms: float = 400.0
    max_concurrency: int = 8
    access_log: Optional[str] = None  # default: <out>/access.jsonl

    def __post_init__(self) -> None:
        if self.deadline_ms <= 0 or self.max_concurrency < 1:
            raise ConfigurationError("deadline_ms must be positive and max_concurrency >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["heuristics"] = self.heuristics.to_dict()
        return d


@dataclass(frozen=True)
class RunConfig:
    game: GameConfig = field(default_factory=GameConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    heuristics: tuple[HeuristicConfig, ...] = ()
    ppo: PPOConfig = field(default_factory=PPOConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    arena: ArenaConfig = field(default_factory=ArenaConfig)
    serve: ServeConfig = field(default_factory=ServeConfig)

    def agent_heuristics(self, index: int) -> HeuristicConfig:
        if not self.heuristics:
            return HeuristicConfig()
        if len(self.heuristics) == 1:
            return self.heuristics[0]
        return self.heuristics[index]

    def to_dict(self) -> dict:
        return {
            "game": self.game.to_dict(),
            "reward": self.reward.to_dict(),
            "heuristics": [h.to_dict() for h in self.heuristics],
            "ppo": self.ppo.to_dict(),
            "train": asdict(self.train),
            "arena": {
                "agents": [a.to_dict() for a in self.arena.agents],
                "ffa_games": self.arena.ffa_games,
                "games_per_pair": self.arena.games_per_pair,
                "max_turns": self.arena.max_turns,
                "seed": self.arena.seed,
            },
            "serve": self.serve.to_dict(),
        }


def _build(cls, section: str, data: Any):
    if data is None:
        return cls()
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{section}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"{section}: unknown fields {sorted(unknown)}")
    try:
        return cls(**data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{section}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{section}: {exc}") from None


def _heuristics(section: str, data: Any) -> HeuristicConfig:
    if data is None:
        return HeuristicConfig()
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{section}: expected a mapping")
    try:
        return HeuristicConfig.from_dict(data)
    except (ConfigurationError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{section}: {exc}") from None


def run_config_from_dict(data: Mapping) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ConfigurationError("config root must be a mapping")
    unknown = set(data) - {"game", "reward", "heuristics", "ppo", "train", "arena", "serve"}
    if unknown:
        raise ConfigurationError(f"unknown top-level sections {sorted(unknown)}")
    game = _build(GameConfig, "game", data.get("game"))
    reward = _build(RewardConfig, "reward", data.get("reward"))
    raw_h = data.get("heuristics")
    if raw_h is None:
        heuristics: tuple[HeuristicConfig, ...] = ()
    elif isinstance(raw_h, Mapping):
        heuristics = (_heuristics("heuristics", raw_h),)
    else:
        heuristics = tuple(_heuristics(f"heuristics[{i}]", h) for i, h in enumerate(raw_h))
        if len(heuristics) not in (0, 1, game.n_snakes):
            raise ConfigurationError(
                f"heuristics: expected 1 or {game.n_snakes} entries, got {len(heuristics)}"
            )
    ppo = _build(PPOConfig, "ppo", data.get("ppo"))
    train = _build(TrainConfig, "train", data.get("train"))
    raw_arena = dict(data.get("arena") or {})
    agents = []
    for i, a in enumerate(raw_arena.pop("agents", []) or []):
        if not isinstance(a, Mapping) or "name" not in a:
            raise ConfigurationError(f"arena.agents[{i}]: needs a name")
        a = dict(a)
        a["heuristics"] = _heuristics(f"arena.agents[{i}].heuristics", a.get("heuristics"))
        agents.append(_build(AgentEntry, f"arena.agents[{i}]", a))
    arena = _build(ArenaConfig, "arena", {**raw_arena, "agents": tuple(agents)})
    raw_serve = dict(data.get("serve") or {})
    raw_serve["heuristics"] = _heuristics("serve.heuristics", raw_serve.get("heuristics"))
    serve = _build(ServeConfig, "serve", raw_serve)
    return RunConfig(game, reward, heuristics, ppo, train, arena, serve)


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    return data or {}


def apply_overrides(data: dict, overrides: Mapping[str, str]) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as YAML scalars."""
    data = json.loads(json.dumps(data))
    for dotted, raw in overrides.items():
        node = data
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = yaml.safe_load(raw) if isinstance(raw, str) else raw
    return data


def env_overrides(environ: Mapping[str, str] = os.environ) -> dict[str, str]:
    """``HILLSNAKE_TRAIN__ITERATIONS=3`` becomes ``train.iterations=3``."""
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX) and "__" in key:
            out[key[len(ENV_PREFIX):].lower().replace("__", ".")] = value
    return out
