"""Client side of the newline-JSON environment protocol (v1).

The server emits one observation per slot, expects one action record back,
then emits the reward with an episode-done flag. The client wraps any
(reader, writer) line-stream pair, typically the pipes of an `env-serve`
subprocess, and can record full transcripts for byte-level replay checks.
"""

from __future__ import annotations

import json
import subprocess
import sys
from dataclasses import dataclass, field

PROTOCOL_VERSION = 1


class ProtocolError(RuntimeError):
    pass


@dataclass
class Transcript:
    """Ordered raw lines of one session, tagged by direction."""

    entries: list[tuple[str, str]] = field(default_factory=list)  # (dir, line)

    def record(self, direction: str, line: str):
        self.entries.append((direction, line))

    def lines(self, direction: str) -> list[str]:
        return [line for d, line in self.entries if d == direction]


class EnvClient:
    """Blocking observation/action/reward exchange over line streams."""

    def __init__(self, reader, writer, transcript: Transcript | None = None):
        self.reader = reader
        self.writer = writer
        self.transcript = transcript

    def _read(self) -> dict | None:
        line = self.reader.readline()
        if line == "":
            return None
        if self.transcript is not None:
            self.transcript.record("in", line)
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable server message: {exc}") from exc
        if doc.get("v") != PROTOCOL_VERSION:
            raise ProtocolError(f"unexpected protocol version in {line.strip()}")
        if doc.get("type") == "err":
            raise ProtocolError(f"server error: {doc.get('message')}")
        return doc

    def observe(self) -> tuple[int, list[int]] | None:
        """Next observation, or None when the server is done."""
        doc = self._read()
        if doc is None:
            return None
        if doc["type"] != "obs":
            raise ProtocolError(f"expected an observation, got {doc['type']}")
        return int(doc["slot"]), [int(x) for x in doc["state"]]

    def act(self, action: int) -> tuple[float, bool]:
        """Send one action; returns (reward, episode_done)."""
        line = json.dumps({"v": PROTOCOL_VERSION, "type": "act",
                           "value": int(action)}) + "\n"
        if self.transcript is not None:
            self.transcript.record("out", line)
        self.writer.write(line)
        self.writer.flush()
        doc = self._read()
        if doc is None:
            raise ProtocolError("server closed before sending the reward")
        if doc["type"] != "rew":
            raise ProtocolError(f"expected a reward, got {doc['type']}")
        return float(doc["value"]), bool(doc["done"])


class EnvProcess:
    """`env-serve` child process wrapped as an EnvClient."""

    def __init__(self, config_path: str, role: str, episode_slots: int,
                 episodes: int, python: str = sys.executable,
                 transcript: Transcript | None = None):
        self.proc = subprocess.Popen(
            [python, "-m", "pushpull.cli", "env-serve",
             "--config", config_path, "--role", role,
             "--episode-slots", str(episode_slots),
             "--episodes", str(episodes)],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True)
        self.client = EnvClient(self.proc.stdout, self.proc.stdin, transcript)

    def close(self, timeout: float = 60.0) -> int:
        if self.proc.stdin and not self.proc.stdin.closed:
            self.proc.stdin.close()
        return self.proc.wait(timeout=timeout)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


STATE_DIMS = {"sa": (10, 2), "aa": (11, 10, 5)}
STATE_BASES = {"sa": (0, 0), "aa": (0, 1, 1)}  # age/lateness are 1-based


def one_hot_state(role: str, state: list[int]) -> list[float]:
    """Concatenated one-hot encoding of a CMDP state tuple."""
    dims = STATE_DIMS[role]
    bases = STATE_BASES[role]
    if len(state) != len(dims):
        raise ValueError(f"{role} states have {len(dims)} components")
    out: list[float] = []
    for value, dim, base in zip(state, dims, bases):
        vec = [0.0] * dim
        idx = value - base
        if not 0 <= idx < dim:
            raise ValueError(f"state component {value} outside [{base}, {base + dim})")
        vec[idx] = 1.0
        out.extend(vec)
    return out


def observation_size(role: str) -> int:
    return sum(STATE_DIMS[role])
