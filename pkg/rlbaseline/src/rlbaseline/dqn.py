"""DQN with experience replay and a target network.

Two hidden layers of 64 units, Adam at 1e-4, discount 0.75 (matching the
model-based solver's discount); replay/exploration knobs follow the usual
DQN recipe scaled to these small state spaces. Training is deterministic
under a fixed seed up to library-level nondeterminism (single-threaded CPU
torch is reproducible in practice).
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .protocol import EnvClient, observation_size, one_hot_state


@dataclass
class DqnConfig:
    hidden: tuple[int, int] = (64, 64)
    learning_rate: float = 1e-4
    discount: float = 0.75
    buffer_size: int = 50_000
    batch_size: int = 64
    learn_start: int = 500
    update_every: int = 2
    target_sync_every: int = 500
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5  # of the training steps
    seed: int = 0


class QNetwork(nn.Module):
    def __init__(self, obs_dim: int, hidden: tuple[int, int], actions: int = 2):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(obs_dim, hidden[0]), nn.ReLU(),
            nn.Linear(hidden[0], hidden[1]), nn.ReLU(),
            nn.Linear(hidden[1], actions))

    def forward(self, x):
        return self.net(x)


class ReplayBuffer:
    def __init__(self, capacity: int, rng: random.Random):
        self.buf: deque = deque(maxlen=capacity)
        self.rng = rng

    def push(self, obs, action, reward, next_obs, done):
        self.buf.append((obs, action, reward, next_obs, done))

    def sample(self, batch_size: int):
        batch = self.rng.sample(list(self.buf), batch_size)
        obs, act, rew, nxt, done = zip(*batch)
        return (torch.tensor(np.array(obs), dtype=torch.float32),
                torch.tensor(act, dtype=torch.int64),
                torch.tensor(rew, dtype=torch.float32),
                torch.tensor(np.array(nxt), dtype=torch.float32),
                torch.tensor(done, dtype=torch.float32))

    def __len__(self):
        return len(self.buf)


@dataclass
class TrainResult:
    steps: int
    episode_returns: list[float] = field(default_factory=list)
    final_epsilon: float = 0.0

    @property
    def reward_curve(self) -> list[float]:
        return self.episode_returns


def train(client: EnvClient, role: str, config: DqnConfig,
          steps: int) -> tuple[dict, TrainResult]:
    """Epsilon-greedy DQN over the protocol stream.

    Returns (checkpoint, result); the checkpoint is a plain state-dict plus
    the metadata needed to rebuild the greedy policy.
    """
    torch.manual_seed(config.seed)
    torch.set_num_threads(1)  # tiny nets: thread sync costs more than it buys
    rng = random.Random(config.seed)
    obs_dim = observation_size(role)
    online = QNetwork(obs_dim, config.hidden)
    target = QNetwork(obs_dim, config.hidden)
    target.load_state_dict(online.state_dict())
    opt = torch.optim.Adam(online.parameters(), lr=config.learning_rate)
    buffer = ReplayBuffer(config.buffer_size, rng)
    decay_steps = max(1, int(steps * config.eps_decay_fraction))

    result = TrainResult(steps=0)
    episode_return = 0.0
    pending = None  # (obs_vec, action) awaiting its successor observation
    eps = config.eps_start

    for step in range(steps):
        nxt = client.observe()
        if nxt is None:
            break
        _, state = nxt
        obs = one_hot_state(role, state)
        if pending is not None:
            p_obs, p_act, p_rew, p_done = pending
            buffer.push(p_obs, p_act, p_rew, obs, p_done)
            pending = None

        frac = min(1.0, step / decay_steps)
        eps = config.eps_start + (config.eps_end - config.eps_start) * frac
        if rng.random() < eps:
            action = rng.randrange(2)
        else:
            with torch.no_grad():
                q = online(torch.tensor(obs, dtype=torch.float32))
            action = int(torch.argmax(q).item())

        reward, done = client.act(action)
        episode_return += reward
        result.steps += 1
        if done:
            buffer.push(obs, action, reward, obs, True)
            result.episode_returns.append(episode_return)
            episode_return = 0.0
        else:
            pending = (obs, action, reward, False)

        if len(buffer) >= max(config.learn_start, config.batch_size) \
                and step % config.update_every == 0:
            b_obs, b_act, b_rew, b_nxt, b_done = buffer.sample(config.batch_size)
            q = online(b_obs).gather(1, b_act.unsqueeze(1)).squeeze(1)
            with torch.no_grad():
                q_next = target(b_nxt).max(dim=1).values
                y = b_rew + config.discount * (1.0 - b_done) * q_next
            loss = nn.functional.smooth_l1_loss(q, y)
            opt.zero_grad()
            loss.backward()
            opt.step()
        if step % config.target_sync_every == 0:
            target.load_state_dict(online.state_dict())

    result.final_epsilon = eps
    checkpoint = {
        "format": "dqn-checkpoint",
        "version": 1,
        "role": role,
        "obs_dim": obs_dim,
        "hidden": list(config.hidden),
        "state_dict": online.state_dict(),
        "config": config.__dict__ | {"hidden": list(config.hidden)},
    }
    return checkpoint, result


def greedy_policy(checkpoint: dict):
    """Rebuild the greedy action function from a checkpoint."""
    net = QNetwork(checkpoint["obs_dim"], tuple(checkpoint["hidden"]))
    net.load_state_dict(checkpoint["state_dict"])
    net.eval()
    role = checkpoint["role"]

    def act(state: list[int]) -> int:
        obs = torch.tensor(one_hot_state(role, state), dtype=torch.float32)
        with torch.no_grad():
            return int(torch.argmax(net(obs)).item())

    return act


def save_checkpoint(checkpoint: dict, path):
    torch.save(checkpoint, path)


def load_checkpoint(path) -> dict:
    return torch.load(path, weights_only=False)


@dataclass
class EvalRow:
    """Greedy-rollout summary in the simulator's metrics CSV schema."""

    policy_pair: str
    role: str
    seed: int
    slots: int
    reward_rate: float  # effectiveness bit for the receiver role, ack bit for the sender
    action_rate: float

    def csv_row(self) -> list:
        # columns: policy_pair,axis_value,avg_effectiveness,avg_goe,tx_rate,action_rate,seed
        tx = self.action_rate if self.role == "sa" else ""
        return [self.policy_pair, "", self.reward_rate, "", tx,
                self.action_rate, self.seed]


EVAL_HEADER = ["policy_pair", "axis_value", "avg_effectiveness", "avg_goe",
               "tx_rate", "action_rate", "seed"]


def evaluate(checkpoint: dict, client: EnvClient, slots: int,
             seed: int = 0, label: str | None = None) -> EvalRow:
    """Greedy rollout; rewards and the action rate define the summary row."""
    act = greedy_policy(checkpoint)
    total_reward = 0.0
    total_actions = 0
    served = 0
    for _ in range(slots):
        nxt = client.observe()
        if nxt is None:
            break
        _, state = nxt
        action = act(state)
        reward, done = client.act(action)
        total_reward += reward
        total_actions += action
        served += 1
    role = checkpoint["role"]
    return EvalRow(label or f"(dqn-{role})", role, seed, served,
                   total_reward / served if served else 0.0,
                   total_actions / served if served else 0.0)
