"""
Rules as masks, overwrites and reward terms
===========================================

The same four rules can enter training in three ways. Here we build a board
where a snake hugs the left wall, then look at what each rule says.
"""

import numpy as np

from hillsnake import Action, HeuristicConfig, RewardConfig, step
from hillsnake.engine import BoardState, Coord, SnakeState
from hillsnake.heuristics import (
    apply_mask,
    mask_forbidden,
    mask_walls,
    overwrite_action,
    promote_food,
    training_mask,
)
from hillsnake.rewards import base_reward, reward

snake = SnakeState(1, [Coord(0, 3), Coord(0, 4), Coord(0, 5)], health=12, facing=Action.UP)
rival = SnakeState(2, [Coord(5, 5), Coord(5, 6), Coord(6, 6)], facing=Action.UP)
board = BoardState(7, 7, [snake, rival], {Coord(2, 2)})

###############################################################################
# Prevention rules zero out actions; promotion rules name a preferred one.

print("walls    ", mask_walls(board, 1).valid)       # LEFT leaves the board
print("forbidden", mask_forbidden(board, 1).valid)   # DOWN reverses into the neck
print("food     ", promote_food(board, 1, health_threshold=30).preferred)

###############################################################################
# In-training masking renormalizes the policy over the remaining actions.

cfg = HeuristicConfig(rules={"rule1_walls": "in_training_mask", "rule2_forbidden": "in_training_mask"})
policy = np.array([0.1, 0.4, 0.3, 0.2])
print(apply_mask(policy, training_mask(board, 1, cfg)))

###############################################################################
# Ad-hoc overwriting leaves the policy alone and swaps the action afterwards.

adhoc = HeuristicConfig(rules={"rule2_forbidden": "ad_hoc_overwrite", "rule3_food": "ad_hoc_overwrite"})
print(overwrite_action(Action.DOWN, board, 1, adhoc, policy))

###############################################################################
# Reward shaping adds -0.4 for a wall hit on top of the -1 for dying.

shaping = HeuristicConfig(rules={"rule1_walls": "reward_shaping"})
rewards = RewardConfig().with_terms(shaping.shaping_terms())
_, events = step(board, {1: Action.LEFT, 2: Action.UP})
print(base_reward(events, 1), reward(events, 1, rewards))
