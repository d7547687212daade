import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
from helpers import LoopServer

from rlbaseline.protocol import (EnvClient, EnvProcess, ProtocolError,
                                 Transcript, observation_size, one_hot_state)


def test_one_hot_sizes_and_values():
    assert observation_size("sa") == 12
    assert observation_size("aa") == 26
    v = one_hot_state("sa", [3, 1])
    assert len(v) == 12 and v[3] == 1.0 and v[10 + 1] == 1.0 and sum(v) == 2.0
    w = one_hot_state("aa", [0, 1, 1])  # age/lateness are 1-based
    assert len(w) == 26 and w[0] == 1.0 and w[11] == 1.0 and w[21] == 1.0
    with pytest.raises(ValueError):
        one_hot_state("aa", [0, 0, 1])
    with pytest.raises(ValueError):
        one_hot_state("sa", [10, 0])
    with pytest.raises(ValueError):
        one_hot_state("sa", [1, 0, 0])


def test_observe_act_cycle():
    srv = LoopServer("sa", 3, 2, lambda s, a: a)
    client = EnvClient(srv, srv)
    seen = []
    while True:
        obs = client.observe()
        if obs is None:
            break
        slot, state = obs
        reward, done = client.act(1)
        seen.append((slot, tuple(state), reward, done))
    assert len(seen) == 6
    assert [d for *_, d in seen] == [False, False, True, False, False, True]
    assert all(r == 1.0 for _, _, r, _ in seen)


def test_server_error_record_raises():
    class ErrServer(LoopServer):
        def write(self, line):
            self.outbox.append('{"v":1,"type":"err","message":"boom"}\n')

    srv = ErrServer("sa", 3, 1, lambda s, a: 0)
    client = EnvClient(srv, srv)
    client.observe()
    with pytest.raises(ProtocolError, match="boom"):
        client.act(0)


def test_version_mismatch_rejected():
    class OldServer(LoopServer):
        def _push_obs(self):
            self.outbox.append('{"v":2,"type":"obs","slot":1,"state":[0,0]}\n')

    srv = OldServer("sa", 3, 1, lambda s, a: 0)
    client = EnvClient(srv, srv)
    with pytest.raises(ProtocolError):
        client.observe()


def test_transcript_records_and_replays_identically():
    """A recorded session replayed through a fresh client is byte-identical."""

    def scripted_policy(state):
        return state[0] % 2

    srv = LoopServer("sa", 5, 2, lambda s, a: a)
    transcript = Transcript()
    client = EnvClient(srv, srv, transcript)
    while True:
        obs = client.observe()
        if obs is None:
            break
        client.act(scripted_policy(obs[1]))

    class ReplayReader:
        def __init__(self, lines):
            self.lines = list(lines)

        def readline(self):
            return self.lines.pop(0) if self.lines else ""

    class CaptureWriter:
        def __init__(self):
            self.lines = []

        def write(self, line):
            self.lines.append(line)

        def flush(self):
            pass

    reader = ReplayReader(transcript.lines("in"))
    writer = CaptureWriter()
    replay = EnvClient(reader, writer)
    while True:
        obs = replay.observe()
        if obs is None:
            break
        replay.act(scripted_policy(obs[1]))
    assert writer.lines == transcript.lines("out")


def test_env_process_against_real_server(tmp_path):
    cfg = {"m_horizon": 200, "n_horizon": 1, "seed": 5,
           "sa_policy": {"kind": "periodic", "rate": 0.8},
           "aa_policy": {"kind": "periodic", "rate": 0.8}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    with EnvProcess(str(path), "sa", 30, 1) as env:
        count = 0
        while True:
            obs = env.client.observe()
            if obs is None:
                break
            _, state = obs
            assert len(state) == 2
            _, done = env.client.act(1)
            count += 1
            if done:
                break
    assert count == 30
    assert env.close() == 0
