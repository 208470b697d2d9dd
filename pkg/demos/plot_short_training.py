"""
A short PPO run on a small board
================================

Three independent learners on 7x7. Episode length is the learning signal:
untrained snakes die within a few turns. About a minute on one core.
"""

from hillsnake import GameConfig, HeuristicConfig
from hillsnake.learner import PPOConfig, Trainer, evaluate_episode_length

game = GameConfig(7, 7, 3)
masked = [HeuristicConfig(rules={"rule2_forbidden": "in_training_mask"})]

trainer = Trainer(game, PPOConfig(rollout_horizon=128), heuristics=masked, n_envs=8, seed=0)
before = evaluate_episode_length(trainer.params, game, 200, seed=1, heuristics=masked)
print("untrained mean length", before["episode_length_mean"])

###############################################################################
# Each iteration plays 128 turns in each of 8 games, then updates every policy.

while trainer.env_steps < 60_000:
    m = trainer.iterate()
    if m["iteration"] % 10 == 0:
        print(m["iteration"], m["env_steps"], round(m["episode_length_mean"], 1),
              {k: round(v, 2) for k, v in m["event_frequencies"].items() if v})

after = evaluate_episode_length(trainer.params, game, 200, seed=1, heuristics=masked)
print("trained mean length", after["episode_length_mean"])

###############################################################################
# ``trainer.save`` writes one reloadable checkpoint per snake.

paths = trainer.save("demo_checkpoints")
print(paths)
