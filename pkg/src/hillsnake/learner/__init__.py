"""PPO learner: network, advantage estimation, updates, training loop."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gae import compute_gae
from .network import PolicyParams, init_params, policy_forward
from .ppo import Adam, Batch, DivergenceError, PPOConfig, loss_and_grad, ppo_update
from .train import Trainer, TrainResult, evaluate_episode_length, train

__all__ = [
    "Adam",
    "Batch",
    "CheckpointError",
    "DivergenceError",
    "PPOConfig",
    "PolicyParams",
    "TrainResult",
    "Trainer",
    "compute_gae",
    "evaluate_episode_length",
    "init_params",
    "load_checkpoint",
    "loss_and_grad",
    "policy_forward",
    "ppo_update",
    "save_checkpoint",
    "train",
]
