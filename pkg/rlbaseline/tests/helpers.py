"""In-process protocol servers for sanity environments."""

import json


class LoopServer:
    """Minimal v1 protocol server with a pluggable reward rule.

    Serves deterministic cycling states; duck-types both the reader and the
    writer ends so an EnvClient can talk to it in process.
    """

    def __init__(self, role: str, episode_slots: int, episodes: int, reward_fn):
        self.role = role
        self.episode_slots = episode_slots
        self.episodes_left = episodes
        self.reward_fn = reward_fn
        self.slot = 0
        self.in_episode = 0
        self.outbox: list[str] = []
        self.state = None
        self._push_obs()

    def _next_state(self):
        k = self.slot % 10
        if self.role == "sa":
            return [k, self.slot % 2]
        return [k, 1 + k % 10, 1 + k % 5]

    def _push_obs(self):
        self.state = self._next_state()
        self.outbox.append(json.dumps(
            {"v": 1, "type": "obs", "slot": self.slot + 1,
             "state": self.state}) + "\n")

    # reader interface
    def readline(self) -> str:
        return self.outbox.pop(0) if self.outbox else ""

    # writer interface
    def write(self, line: str):
        doc = json.loads(line)
        assert doc["type"] == "act" and doc["v"] == 1
        reward = self.reward_fn(self.state, doc["value"])
        self.slot += 1
        self.in_episode += 1
        done = self.in_episode >= self.episode_slots
        self.outbox.append(json.dumps(
            {"v": 1, "type": "rew", "value": reward, "done": done}) + "\n")
        if done:
            self.episodes_left -= 1
            self.in_episode = 0
            if self.episodes_left <= 0:
                return
        self._push_obs()

    def flush(self):
        pass
