"""
Free-for-all and 1v1 tournaments
================================

Baseline agents only, so this runs in seconds. Swap in
``AgentSpec("mine", "checkpoint_policy", checkpoint="agent_1.npz")`` to
evaluate a trained policy.
"""

from hillsnake import GameConfig, HeuristicConfig
from hillsnake.arena import AgentSpec, format_stats, run_1v1, run_ffa

agents = [
    AgentSpec("random"),
    AgentSpec("masked", heuristics=HeuristicConfig(
        rules={"rule1_walls": "in_training_mask", "rule2_forbidden": "in_training_mask"})),
    AgentSpec("scripted", "scripted"),
    AgentSpec("hungry", "scripted", HeuristicConfig(rules={"rule3_food": "ad_hoc_overwrite"})),
]

###############################################################################
# 30 FFA games: 4 points for the last survivor down to 1, ties split evenly.

ffa = run_ffa(agents, 30, GameConfig(11, 11), seed=0)
print(ffa.table())
print(format_stats(ffa.stats))
print("points handed out:", sum(ffa.totals.values()))

###############################################################################
# 10 games per pair, 60 games in total.

duel = run_1v1(agents, 10, GameConfig(11, 11), seed=0)
print(duel.table())
print(duel.n_games, "games")
