"""Independent-learner PPO training over shared Battlesnake games.

Every snake slot has its own policy (unless ``share_parameters`` is set).
Each iteration steps ``n_envs`` games in lockstep for ``rollout_horizon``
turns, then runs one PPO update per policy on what that policy collected.
Games carry over between iterations; a trajectory cut at the end of an
iteration is bootstrapped from the value of its last observation.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..engine import (
    ELIMINATION_KINDS,
    BoardState,
    EventKind,
    GameConfig,
    init_game,
    is_terminal,
    step,
)
from ..encoder import encode
from ..heuristics import HeuristicConfig, training_mask
from ..rewards import RewardConfig, reward
from .checkpoint import save_checkpoint
from .gae import compute_gae
from .network import N_ACTIONS, PolicyParams, forward, init_params, masked_log_softmax
from .ppo import Adam, Batch, PPOConfig, ppo_update

log = logging.getLogger(__name__)

TRACKED_EVENTS = (
    EventKind.HIT_WALL,
    EventKind.FORBIDDEN_MOVE,
    EventKind.STARVED,
    EventKind.KILLED_OTHER,
    EventKind.HIT_SELF,
    EventKind.HIT_OTHER_BODY,
    EventKind.HEAD_TO_HEAD_LOSS,
    EventKind.HEAD_TO_HEAD_MUTUAL,
    EventKind.ATE_FOOD,
)


def sample_actions(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling, one uniform draw per row; zero-probability
    actions are never chosen."""
    u = rng.random(probs.shape[0])
    cdf = np.cumsum(probs, axis=1)
    actions = (cdf <= u[:, None]).sum(axis=1)
    # float round-off can push u past the last cdf entry
    last_valid = N_ACTIONS - 1 - np.argmax(probs[:, ::-1] > 0.0, axis=1)
    return np.minimum(actions, last_valid)


def act(
    params: PolicyParams,
    observations: np.ndarray,
    masks: Optional[np.ndarray],
    rng: Optional[np.random.Generator],
    greedy: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batched action selection: (actions, log_probs, values, probs)."""
    x = np.asarray(observations, dtype=float).reshape(len(observations), -1)
    cache = forward(params, x)
    logp = masked_log_softmax(cache.logits, masks)
    probs = np.exp(logp)
    if greedy:
        actions = np.argmax(probs, axis=1)
    else:
        actions = sample_actions(probs, rng)
    rows = np.arange(len(actions))
    return actions, logp[rows, actions], cache.values, probs


@dataclass
class _Segment:
    obs: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)


@dataclass
class _Game:
    board: BoardState
    segments: dict[int, _Segment]
    events: Counter
    death_turn: dict[int, int]


@dataclass
class _PolicyBuffer:
    obs: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    advantages: list = field(default_factory=list)
    returns: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    def batch(self) -> Batch:
        return Batch(
            np.stack(self.obs),
            np.array(self.actions, dtype=np.int64),
            np.array(self.log_probs),
            np.array(self.advantages),
            np.array(self.returns),
            np.stack(self.masks).astype(np.int8),
        )


@dataclass
class TrainResult:
    params: list[PolicyParams]
    metrics: list[dict]
    env_steps: int


class Trainer:
    def __init__(
        self,
        game: GameConfig,
        ppo: PPOConfig,
        reward_config: RewardConfig = RewardConfig(),
        heuristics: Sequence[HeuristicConfig] = (),
        n_envs: int = 1,
        max_turns: int = 1000,
        seed: int = 0,
        share_parameters: bool = False,
        hidden: int = 128,
    ) -> None:
        self.game = game
        self.ppo = ppo
        self.reward_config = reward_config
        n = game.n_snakes
        if not heuristics:
            heuristics = [HeuristicConfig()] * n
        elif len(heuristics) == 1:
            heuristics = list(heuristics) * n
        self.heuristics = list(heuristics)
        self.n_envs = n_envs
        self.max_turns = max_turns
        self.share_parameters = share_parameters
        self.rng = np.random.default_rng(seed)
        self.input_dim = game.width * game.height * 3
        n_policies = 1 if share_parameters else n
        self.params = [init_params(self.input_dim, self.rng, hidden) for _ in range(n_policies)]
        self.optimizers = [Adam(ppo.learning_rate) for _ in range(n_policies)]
        self.env_steps = 0
        self.iteration = 0
        self.games = [self._new_game() for _ in range(n_envs)]

    def policy_index(self, agent_id: int) -> int:
        return 0 if self.share_parameters else agent_id - 1

    def _new_game(self) -> _Game:
        seed = int(self.rng.integers(0, 2**63))
        board = init_game(
            GameConfig(
                self.game.width, self.game.height, self.game.n_snakes,
                self.game.initial_length, self.game.food_spawn_probability, seed,
            )
        )
        return _Game(board, {s.id: _Segment() for s in board.snakes}, Counter(), {})

    def _reward_config(self, agent_id: int) -> RewardConfig:
        terms = self.heuristics[agent_id - 1].shaping_terms(self.env_steps)
        return self.reward_config.with_terms(terms) if terms else self.reward_config

    def _close_segment(self, seg: _Segment, bootstrap: float, buf: _PolicyBuffer) -> None:
        if not seg.actions:
            return
        adv, ret = compute_gae(
            seg.rewards, [*seg.values, bootstrap], seg.dones, self.ppo.gamma, self.ppo.lam
        )
        buf.obs.extend(seg.obs)
        buf.masks.extend(seg.masks)
        buf.actions.extend(seg.actions)
        buf.log_probs.extend(seg.log_probs)
        buf.advantages.extend(adv)
        buf.returns.extend(ret)

    def _value_of(self, agent_id: int, board: BoardState) -> float:
        obs = encode(board, agent_id).reshape(1, -1)
        return float(forward(self.params[self.policy_index(agent_id)], obs).values[0])

    def collect(self) -> tuple[list[_PolicyBuffer], list[dict]]:
        buffers = [_PolicyBuffer() for _ in self.params]
        finished: list[dict] = []
        schedule_step = self.env_steps
        for _ in range(self.ppo.rollout_horizon):
            slots = []  # (game index, agent id)
            obs, masks = [], []
            for gi, g in enumerate(self.games):
                for s in g.board.snakes:
                    if not s.alive:
                        continue
                    slots.append((gi, s.id))
                    obs.append(encode(g.board, s.id).reshape(-1))
                    masks.append(
                        training_mask(g.board, s.id, self.heuristics[s.id - 1], schedule_step).valid
                    )
            obs_arr = np.stack(obs)
            mask_arr = np.array(masks, dtype=np.int8)
            actions = np.empty(len(slots), dtype=np.int64)
            log_probs = np.empty(len(slots))
            values = np.empty(len(slots))
            pidx = np.array([self.policy_index(aid) for _, aid in slots])
            for p in range(len(self.params)):
                sel = np.flatnonzero(pidx == p)
                if sel.size == 0:
                    continue
                a, lp, v, _ = act(self.params[p], obs_arr[sel], mask_arr[sel], self.rng)
                actions[sel], log_probs[sel], values[sel] = a, lp, v

            joint: dict[int, dict[int, int]] = {}
            for k, (gi, aid) in enumerate(slots):
                joint.setdefault(gi, {})[aid] = int(actions[k])
            events_by_game = {}
            for gi, acts in joint.items():
                g = self.games[gi]
                _, events = step(g.board, acts, inplace=True)
                events_by_game[gi] = events
                self.env_steps += 1
                for e in events:
                    g.events[e.kind] += 1
                    if e.kind in ELIMINATION_KINDS:
                        g.death_turn[e.agent_id] = g.board.turn
            for k, (gi, aid) in enumerate(slots):
                g = self.games[gi]
                events = events_by_game[gi]
                seg = g.segments[aid]
                seg.obs.append(obs_arr[k])
                seg.masks.append(mask_arr[k])
                seg.actions.append(int(actions[k]))
                seg.log_probs.append(float(log_probs[k]))
                seg.values.append(float(values[k]))
                seg.rewards.append(reward(events, aid, self._reward_config(aid)))
                over = not g.board.snake(aid).alive or is_terminal(g.board) is not None
                seg.dones.append(over)
                if over:
                    self._close_segment(seg, 0.0, buffers[self.policy_index(aid)])
                    g.segments[aid] = _Segment()

            for gi, g in enumerate(self.games):
                terminal = is_terminal(g.board) is not None
                if not terminal and g.board.turn < self.max_turns:
                    continue
                for s in g.board.snakes:
                    if s.alive:
                        boot = 0.0 if terminal else self._value_of(s.id, g.board)
                        self._close_segment(g.segments[s.id], boot, buffers[self.policy_index(s.id)])
                finished.append(self._episode_summary(g))
                self.games[gi] = self._new_game()

        for g in self.games:
            for s in g.board.snakes:
                if s.alive:
                    self._close_segment(
                        g.segments[s.id], self._value_of(s.id, g.board),
                        buffers[self.policy_index(s.id)],
                    )
                    g.segments[s.id] = _Segment()
        return buffers, finished

    @staticmethod
    def _episode_summary(g: _Game) -> dict:
        length = g.board.turn
        return {
            "length": length,
            "events": {k.value: g.events.get(k, 0) for k in TRACKED_EVENTS},
            "survival": {
                s.id: g.death_turn.get(s.id, length) for s in g.board.snakes
            },
        }

    def iterate(self) -> dict:
        buffers, finished = self.collect()
        losses = []
        for p, buf in enumerate(buffers):
            if len(buf) == 0:
                losses.append(None)
                continue
            self.params[p], diag = ppo_update(
                self.params[p], buf.batch(), self.ppo, self.rng, self.optimizers[p]
            )
            diag["samples"] = len(buf)
            losses.append(diag)
        self.iteration += 1
        return self._metrics(finished, losses)

    def _metrics(self, finished: list[dict], losses: list) -> dict:
        lengths = [f["length"] for f in finished]
        n = len(finished)
        per_agent = []
        for aid in range(1, self.game.n_snakes + 1):
            surv = [f["survival"][aid] for f in finished]
            per_agent.append(
                {
                    "agent_id": aid,
                    "episode_length_mean": float(np.mean(surv)) if surv else None,
                    "episode_length_max": int(max(surv)) if surv else None,
                }
            )
        return {
            "iteration": self.iteration,
            "env_steps": self.env_steps,
            "episodes": n,
            "episode_length_mean": float(np.mean(lengths)) if lengths else None,
            "episode_length_max": int(max(lengths)) if lengths else None,
            "event_frequencies": {
                k.value: (sum(f["events"][k.value] for f in finished) / n if n else 0.0)
                for k in TRACKED_EVENTS
            },
            "event_counts": {
                k.value: sum(f["events"][k.value] for f in finished) for k in TRACKED_EVENTS
            },
            "per_agent": per_agent,
            "losses": losses,
        }

    def save(self, directory: str | Path) -> list[Path]:
        directory = Path(directory)
        paths = []
        for aid in range(1, self.game.n_snakes + 1):
            p = self.policy_index(aid)
            path = directory / f"agent_{aid}.npz"
            save_checkpoint(
                self.params[p], path,
                {
                    "board": [self.game.width, self.game.height],
                    "agent_id": aid,
                    "iteration": self.iteration,
                    "env_steps": self.env_steps,
                    "heuristics": self.heuristics[aid - 1].to_dict(),
                },
            )
            paths.append(path)
        return paths


def train(
    run_config,
    out_dir: Optional[str | Path] = None,
    on_iteration: Optional[Callable[[dict], None]] = None,
) -> TrainResult:
    """Train from a ``RunConfig``; writes metrics and checkpoints when ``out_dir`` is set."""
    tc = run_config.train
    trainer = Trainer(
        run_config.game,
        run_config.ppo,
        run_config.reward,
        [run_config.agent_heuristics(i) for i in range(run_config.game.n_snakes)],
        n_envs=tc.n_envs,
        max_turns=tc.max_turns,
        seed=tc.seed,
        share_parameters=tc.share_parameters,
    )
    out = Path(out_dir) if out_dir is not None else None
    metrics_fh = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        metrics_fh = (out / "metrics.jsonl").open("w")
    metrics = []
    try:
        for it in range(tc.iterations):
            m = trainer.iterate()
            metrics.append(m)
            log.info(
                "iteration %d steps %d episodes %d mean length %s",
                m["iteration"], m["env_steps"], m["episodes"], m["episode_length_mean"],
            )
            if metrics_fh is not None:
                metrics_fh.write(json.dumps(m, sort_keys=True) + "\n")
                metrics_fh.flush()
            last = it == tc.iterations - 1 or (
                tc.max_env_steps is not None and trainer.env_steps >= tc.max_env_steps
            )
            if out is not None and (last or (tc.checkpoint_every and m["iteration"] % tc.checkpoint_every == 0)):
                trainer.save(out / "checkpoints" / f"iter_{m['iteration']:04d}")
            if on_iteration is not None:
                on_iteration(m)
            if last:
                break
    finally:
        if metrics_fh is not None:
            metrics_fh.close()
    return TrainResult(trainer.params, metrics, trainer.env_steps)


def evaluate_episode_length(
    params: Sequence[PolicyParams],
    game: GameConfig,
    n_episodes: int,
    seed: int,
    heuristics: Sequence[HeuristicConfig] = (),
    max_turns: int = 1000,
    share_parameters: bool = False,
) -> dict:
    """Mean episode length of stochastic self-play without learning.

    Policies sample from their (masked) distribution exactly as during
    training.
    """
    rng = np.random.default_rng(seed)
    n = game.n_snakes
    hs = list(heuristics) or [HeuristicConfig()]
    if len(hs) == 1:
        hs = hs * n
    lengths, counts = [], Counter()
    for _ in range(n_episodes):
        board = init_game(
            GameConfig(game.width, game.height, n, game.initial_length,
                       game.food_spawn_probability, int(rng.integers(0, 2**63)))
        )
        while is_terminal(board) is None and board.turn < max_turns:
            living = [s.id for s in board.snakes if s.alive]
            joint = {}
            for aid in living:
                p = params[0 if share_parameters else aid - 1]
                obs = encode(board, aid).reshape(1, -1)
                mask = np.array([training_mask(board, aid, hs[aid - 1]).valid], dtype=np.int8)
                a, *_ = act(p, obs, mask, rng)
                joint[aid] = int(a[0])
            board, events = step(board, joint, inplace=True)
            counts.update(e.kind for e in events)
        lengths.append(board.turn)
    return {
        "episodes": n_episodes,
        "episode_length_mean": float(np.mean(lengths)),
        "episode_length_std": float(np.std(lengths)),
        "event_counts": {k.value: counts.get(k, 0) for k in TRACKED_EVENTS},
    }
