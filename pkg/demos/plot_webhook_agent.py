"""
Answering a move request
========================

The webhook server without sockets: ``MoveService.handle`` takes the method,
path and raw body. Wire coordinates have y pointing up.
"""

import json

import numpy as np

from hillsnake import HeuristicConfig
from hillsnake.learner import init_params
from hillsnake.server import MoveService, SnakeAgent, decode_wire_state

you = {"id": "me", "health": 8, "body": [{"x": 5, "y": 5}, {"x": 5, "y": 4}, {"x": 5, "y": 3}],
       "head": {"x": 5, "y": 5}, "length": 3}
payload = {
    "game": {"id": "demo"},
    "turn": 12,
    "board": {"width": 11, "height": 11, "food": [{"x": 5, "y": 6}], "snakes": [you]},
    "you": you,
}

view = decode_wire_state(payload)
print(view.board.snake(view.agent_id).body, view.board.food)  # engine frame, y flipped

###############################################################################
# An untrained policy with the food rule as an ad-hoc overwrite: the hungry
# snake goes for the food directly above it.

params = init_params(11 * 11 * 3, np.random.default_rng(0))
service = MoveService(SnakeAgent(params, HeuristicConfig(rules={"rule3_food": "ad_hoc_overwrite"})))
print(service.handle("GET", "/", b""))
print(service.handle("POST", "/move", json.dumps(payload).encode()))
print(service.handle("POST", "/move", b'{"game": '))
