import json
import socket
import subprocess
import sys
import time
import urllib.request
from pathlib import Path

import pytest

from hillsnake.arena import event_stats, format_stats, placement_points
from hillsnake.cli import main, resolve_config, build_parser
from hillsnake.engine import GameConfig, init_game, step
from hillsnake.replay import read_replay, render_board

ROOT = Path(__file__).resolve().parents[1]
SMOKE = ROOT / "configs" / "smoke_train.yaml"
ARENA = ROOT / "configs" / "arena_baselines.yaml"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert run("train", "--config", SMOKE, "--out", out) == 0
    return out


def test_train_smoke_layout(trained):
    assert (trained / "manifest.json").is_file()
    assert len((trained / "metrics.jsonl").read_text().splitlines()) == 2
    assert sorted(p.name for p in (trained / "checkpoints" / "iter_0002").iterdir()) == [
        "agent_1.npz", "agent_2.npz", "agent_3.npz"
    ]
    assert (trained / "replays" / "final_selfplay.jsonl").is_file()
    assert json.loads((trained / "report.json").read_text())["iterations"] == 2


def test_rerun_from_manifest_reproduces_outputs(trained, tmp_path):
    assert run("train", "--config", trained / "manifest.json", "--out", tmp_path) == 0
    for name in ("manifest.json", "metrics.jsonl", "report.json", "replays/final_selfplay.jsonl",
                 "checkpoints/iter_0002/agent_2.npz"):
        assert (tmp_path / name).read_bytes() == (trained / name).read_bytes(), name


def test_missing_config_and_bad_usage(tmp_path, capsys):
    assert run("train", "--config", tmp_path / "absent.yaml", "--out", tmp_path) == 1
    assert run("nonsense") == 1
    assert run("train", "--config", SMOKE, "--set", "ppo.gamma=3", "--out", tmp_path) == 1
    assert "ppo" in capsys.readouterr().err


def test_field_level_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("train:\n  iterations: 2\n  learning: fast\n")
    assert run("train", "--config", bad, "--out", tmp_path / "o") == 1
    assert "learning" in capsys.readouterr().err


def test_override_precedence(monkeypatch):
    monkeypatch.setenv("HILLSNAKE_TRAIN__ITERATIONS", "7")
    monkeypatch.setenv("HILLSNAKE_GAME__WIDTH", "9")
    args = build_parser().parse_args(
        ["train", "--config", str(SMOKE), "--set", "game.width=8", "--seed", "42"]
    )
    cfg = resolve_config(args)
    assert cfg.train.iterations == 7 and cfg.game.width == 8
    assert cfg.train.seed == cfg.game.seed == cfg.arena.seed == 42


def test_runtime_failure_exit_code(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"type": "turn"}\n')
    assert run("replay", bad) == 2


@pytest.fixture(scope="module")
def arena_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("arena")
    assert run("arena", "--config", ARENA, "--out", out, "--set", "arena.games_per_pair=1") == 0
    return out


def test_arena_report(arena_out):
    report = json.loads((arena_out / "report.json").read_text())
    scores = report["ffa"]["scores"]
    assert len(scores) == 4 and report["ffa"]["games"] == 30
    assert report["1v1"]["games"] == 6
    # recompute every game's placement points from its replay
    total = 0.0
    for path in sorted((arena_out / "replays").glob("ffa_*.jsonl")):
        rep = read_replay(path)
        deaths = {sid: None for sid in rep.agents}
        for rec in rep.turns:
            for sid, kind in rec["events"]:
                if kind in ("hit_wall", "hit_self", "hit_other_body", "head_to_head_loss",
                            "head_to_head_mutual", "starved", "forbidden_move"):
                    deaths[sid] = rec["turn"]
        total += sum(placement_points(deaths).values())
    assert total == sum(s["total"] for s in scores.values()) == 300
    assert "per-game standard deviation" in (arena_out / "report.txt").read_text()


def test_arena_needs_agents(tmp_path):
    cfg = tmp_path / "empty.yaml"
    cfg.write_text("arena: {ffa_games: 3, agents: []}\n")
    assert run("arena", "--config", cfg, "--out", tmp_path / "o") == 1
    cfg.write_text("arena:\n  ffa_games: 1\n  agents:\n    - {name: p, kind: checkpoint_policy, checkpoint: nope.npz}\n"
                   "    - {name: r}\n")
    assert run("arena", "--config", cfg, "--out", tmp_path / "o") == 1


def test_replay_frames_and_stats(arena_out, capsys):
    path = arena_out / "replays" / "ffa_0000.jsonl"
    rep = read_replay(path)
    assert run("replay", path) == 0
    out = capsys.readouterr().out
    assert sum(line.startswith("turn ") for line in out.splitlines()) == len(rep.turns)
    assert run("replay", path, "--stats") == 0
    assert capsys.readouterr().out.strip() == format_stats(event_stats([rep])).strip()
    assert run("replay", path, "--stats", "--json") == 0
    assert json.loads(capsys.readouterr().out) == json.loads(json.dumps(event_stats([rep])))


def test_replay_frames_match_live_engine(arena_out):
    rep = read_replay(arena_out / "replays" / "ffa_0003.jsonl")
    board = init_game(GameConfig(**rep.header["config"]))
    assert render_board(rep.board_at(0)) == render_board(board)
    for i, rec in enumerate(rep.turns[1:], start=1):
        board, _ = step(board, {int(k): v for k, v in rec["actions"].items()})
        assert board.snapshot() == {k: rep.turns[i][k] for k in ("turn", "snakes", "food")}
        assert render_board(rep.board_at(i)) == render_board(board)


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_subcommand(trained, tmp_path):
    port = _free_port()
    ckpt = trained / "checkpoints" / "iter_0002" / "agent_1.npz"
    proc = subprocess.Popen(
        [sys.executable, "-m", "hillsnake.cli", "serve", "--checkpoint", str(ckpt),
         "--port", str(port), "--out", str(tmp_path)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE,
    )
    try:
        for _ in range(100):
            try:
                with urllib.request.urlopen(f"http://127.0.0.1:{port}/", timeout=1) as resp:
                    info = json.loads(resp.read())
                break
            except OSError:
                time.sleep(0.1)
        else:
            pytest.fail("server did not start")
        assert info["apiversion"] == "1"
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "serve"
    assert '"status": 200' in (tmp_path / "access.jsonl").read_text()


def test_serve_without_checkpoint_is_config_error():
    assert run("serve") == 1
