"""``hillsnake`` command line: train, arena, replay and serve.

Configuration precedence, lowest first: config file, ``HILLSNAKE_*``
environment variables (``HILLSNAKE_TRAIN__ITERATIONS=3``), ``--set``
overrides, then ``--seed``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import __version__
from .arena import AgentSpec, format_stats, play_game, run_1v1, run_ffa
from .config import (
    RunConfig,
    apply_overrides,
    env_overrides,
    load_config_file,
    run_config_from_dict,
)
from .engine import ConfigurationError, GameConfig

log = logging.getLogger("hillsnake")

MANIFEST_TYPE = "hillsnake-manifest"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for runtime failures here
    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, out_default: Optional[str]) -> None:
    p.add_argument("--config", help="run config (YAML or JSON), or a manifest.json to re-run")
    p.add_argument("--seed", type=int, help="overrides game, training and arena seeds")
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--parallelism", type=int, default=1, help="worker processes for arena games")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="config override, may repeat")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hillsnake", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"hillsnake {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train agents with PPO")
    _common(p, "runs/train")

    p = sub.add_parser("arena", help="run FFA and/or 1v1 tournaments")
    _common(p, "runs/arena")

    p = sub.add_parser("replay", help="print replay frames or event statistics")
    p.add_argument("path")
    p.add_argument("--stats", action="store_true", help="print the per-agent event table")
    p.add_argument("--json", action="store_true", help="with --stats, print JSON")

    p = sub.add_parser("serve", help="serve a checkpoint over the webhook API")
    _common(p, None)
    p.add_argument("--checkpoint")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--deadline-ms", type=float)
    p.add_argument("--max-concurrency", type=int)
    return parser


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    data: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            data = load_config_file(path)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"{path}: cannot parse ({exc})") from None
        if isinstance(data, dict) and data.get("type") == MANIFEST_TYPE:
            data = data["config"]
    data = apply_overrides(data, env_overrides(environ))
    sets = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        sets[k] = v
    data = apply_overrides(data, sets)
    if getattr(args, "seed", None) is not None:
        data = apply_overrides(
            data, {"game.seed": args.seed, "train.seed": args.seed, "arena.seed": args.seed}
        )
    return run_config_from_dict(data)


def write_manifest(out: Path, command: str, config: RunConfig, paths: dict, **extra) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "type": MANIFEST_TYPE,
        "tool": "hillsnake",
        "version": __version__,
        "command": command,
        "config": config.to_dict(),
        "seeds": {"game": config.game.seed, "train": config.train.seed, "arena": config.arena.seed},
        "paths": paths,
        **extra,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def cmd_train(args: argparse.Namespace) -> int:
    from .learner import train

    cfg = resolve_config(args)
    out = Path(args.out)
    write_manifest(out, "train", cfg, {
        "metrics": "metrics.jsonl", "checkpoints": "checkpoints/", "replays": "replays/",
        "report": "report.json",
    })
    print(f"seed {cfg.train.seed}; writing to {out}", file=sys.stderr)
    result = train(cfg, out)
    # one seeded self-play game with the final policies, for inspection
    agents = [
        AgentSpec(f"agent_{i + 1}", "checkpoint_policy", cfg.agent_heuristics(i), params=p)
        for i, p in enumerate(
            result.params if len(result.params) == cfg.game.n_snakes
            else result.params * cfg.game.n_snakes
        )
    ]
    (out / "replays").mkdir(exist_ok=True)
    replay = play_game(agents, cfg.game, cfg.train.max_turns, cfg.train.seed, {"mode": "selfplay"})
    (out / "replays" / "final_selfplay.jsonl").write_text(replay.to_text())
    last = result.metrics[-1]
    report = {
        "env_steps": result.env_steps,
        "iterations": len(result.metrics),
        "final": last,
        "checkpoint": f"checkpoints/iter_{last['iteration']:04d}/",
    }
    _write_json(out / "report.json", report)
    (out / "report.txt").write_text(
        f"iterations {report['iterations']}  env steps {result.env_steps}\n"
        f"final mean episode length {last['episode_length_mean']}\n"
    )
    print(f"done: {result.env_steps} env steps, checkpoints in {out / report['checkpoint']}")
    return EXIT_OK


def _agent_specs(cfg: RunConfig) -> list[AgentSpec]:
    return [
        AgentSpec(a.name, a.kind, a.heuristics, a.checkpoint, a.greedy) for a in cfg.arena.agents
    ]


def cmd_arena(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    ac = cfg.arena
    if len(ac.agents) < 2:
        raise ConfigurationError("arena.agents: at least two agents are required")
    if not ac.ffa_games and not ac.games_per_pair:
        raise ConfigurationError("arena: set ffa_games and/or games_per_pair")
    out = Path(args.out)
    write_manifest(out, "arena", cfg, {
        "replays": "replays/", "report": "report.json", "table": "report.txt",
    })
    print(f"seed {ac.seed}; writing to {out}", file=sys.stderr)
    agents = _agent_specs(cfg)
    report, text = {}, []
    replay_dir = out / "replays"
    replay_dir.mkdir(exist_ok=True)
    if ac.ffa_games:
        res = run_ffa(agents, ac.ffa_games, cfg.game, ac.max_turns, ac.seed, args.parallelism)
        report["ffa"] = res.report()
        text += [f"FFA, {ac.ffa_games} games", res.table(), "", format_stats(res.stats), ""]
        for i, rep in enumerate(res.replays):
            (replay_dir / f"ffa_{i:04d}.jsonl").write_text(rep.to_text())
    if ac.games_per_pair:
        res = run_1v1(agents, ac.games_per_pair, cfg.game, ac.max_turns, ac.seed, args.parallelism)
        report["1v1"] = res.report()
        text += [f"1v1, {ac.games_per_pair} games per pair ({res.n_games} games)", res.table(), "",
                 format_stats(report["1v1"]["event_stats"]), ""]
        for i, rep in enumerate(res.replays):
            (replay_dir / f"1v1_{i:04d}.jsonl").write_text(rep.to_text())
    _write_json(out / "report.json", report)
    (out / "report.txt").write_text("\n".join(text))
    print("\n".join(text))
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    from .arena import event_stats
    from .replay import read_replay, render_frames

    replay = read_replay(args.path)
    if args.stats:
        stats = event_stats([replay])
        print(json.dumps(stats, indent=2, sort_keys=True) if args.json else format_stats(stats))
        return EXIT_OK
    for frame in render_frames(replay):
        print(frame)
        print()
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .learner import load_checkpoint
    from .server import ServerConfig, SnakeAgent, serve

    overrides = {
        "serve.checkpoint": args.checkpoint, "serve.host": args.host, "serve.port": args.port,
        "serve.deadline_ms": args.deadline_ms, "serve.max_concurrency": args.max_concurrency,
    }
    args.set = list(args.set) + [f"{k}={v}" for k, v in overrides.items() if v is not None]
    cfg = resolve_config(args)
    sc = cfg.serve
    if not sc.checkpoint:
        raise ConfigurationError("serve.checkpoint: a checkpoint is required (--checkpoint)")
    params, _ = load_checkpoint(sc.checkpoint)
    log_stream = None
    if args.out:
        out = Path(args.out)
        write_manifest(out, "serve", cfg, {"access_log": "access.jsonl"})
        log_stream = (out / "access.jsonl").open("a")
    elif sc.access_log:
        log_stream = open(sc.access_log, "a")
    else:
        log_stream = sys.stderr
    print(f"serving {sc.checkpoint} on http://{sc.host}:{sc.port}", file=sys.stderr)
    serve(
        SnakeAgent(params, sc.heuristics),
        ServerConfig(host=sc.host, port=sc.port, deadline_ms=sc.deadline_ms,
                     max_concurrency=sc.max_concurrency),
        log_stream,
    )
    return EXIT_OK


COMMANDS = {"train": cmd_train, "arena": cmd_arena, "replay": cmd_replay, "serve": cmd_serve}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
