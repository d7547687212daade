"""Model-free DQN baseline for the status-update environment protocol."""

__version__ = "0.1.0"

from .dqn import (DqnConfig, EvalRow, QNetwork, ReplayBuffer, evaluate,
                  greedy_policy, load_checkpoint, save_checkpoint, train)
from .protocol import (EnvClient, EnvProcess, ProtocolError, Transcript,
                       observation_size, one_hot_state)

__all__ = [
    "DqnConfig", "EvalRow", "QNetwork", "ReplayBuffer", "evaluate",
    "greedy_policy", "load_checkpoint", "save_checkpoint", "train",
    "EnvClient", "EnvProcess", "ProtocolError", "Transcript",
    "observation_size", "one_hot_state",
]
