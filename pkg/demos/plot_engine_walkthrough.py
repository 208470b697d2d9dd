"""
Playing a seeded game by hand
=============================

Start a 7x7 game with three snakes, move everyone for a few turns, and look
at the events each turn produces. Coordinates have the origin in the top-left
corner, so UP decreases y.
"""

import numpy as np

from hillsnake import Action, GameConfig, init_game, is_terminal, step
from hillsnake.replay import Replay, header_record, render_board, turn_record

config = GameConfig(width=7, height=7, n_snakes=3, seed=42)
board = init_game(config)
print(render_board(board))

###############################################################################
# Every snake starts stacked on one boundary cell with health 100 and no facing,
# so any first move is allowed.

for s in board.snakes:
    print(s.id, s.head, s.length, s.health, s.facing)

###############################################################################
# Random play until somebody wins. ``step`` returns a new board and the
# list of events; the replay records both.

rng = np.random.default_rng(0)
replay = Replay(header_record(config), [turn_record(board)])
while is_terminal(board) is None:
    joint = {s.id: Action(int(rng.integers(4))) for s in board.living}
    board, events = step(board, joint)
    replay.turns.append(turn_record(board, joint, events))
    print(board.turn, [(e.agent_id, e.kind.value) for e in events if e.kind.value != "survived_turn"])

print(render_board(board))
print("outcome:", is_terminal(board))

###############################################################################
# The replay is canonical JSON lines: the same seed and actions give the same
# bytes, and any turn can be turned back into a board.

text = replay.to_text()
print(len(text.splitlines()), "records")
print(render_board(replay.board_at(1)))
