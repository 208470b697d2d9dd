import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hillsnake.engine import Action, BoardState, Coord, SnakeState  # noqa: E402


def make_board(width, height, snakes, food=(), turn=0, p=0.0, seed=0):
    """snakes: iterable of (id, body, health, facing) with body as (x, y) pairs."""
    built = []
    for sid, body, health, facing in snakes:
        built.append(
            SnakeState(
                id=sid,
                body=[Coord(*c) for c in body],
                health=health,
                facing=None if facing is None else Action(facing),
            )
        )
    return BoardState(width, height, built, {Coord(*f) for f in food}, turn, p, random.Random(seed))


@pytest.fixture
def board_factory():
    return make_board


ACCEPTANCE_CRITERIA = range(1, 12)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None:
        return
    results = module.RESULTS
    broken = [
        rep.nodeid
        for key in ("failed", "error")
        for rep in terminalreporter.stats.get(key, [])
        if hasattr(rep, "nodeid")
    ]
    terminalreporter.section("acceptance criteria")
    for n in ACCEPTANCE_CRITERIA:
        if n in results:
            ok, detail = results[n]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        elif any(f"test_criterion_{n}_" in nodeid for nodeid in broken):
            terminalreporter.write_line(f"[FAIL] criterion {n}: raised before reporting")
        else:
            terminalreporter.write_line(f"[----] criterion {n}: not run")
