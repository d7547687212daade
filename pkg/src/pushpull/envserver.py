"""Newline-delimited JSON environment sessions for external decision agents.

One agent role (sender or receiver) is driven by a connected client; the
other runs its configured internal policy. Every message carries ``"v": 1``.
Per slot the server emits an observation, reads an action, then emits the
reward with an episode-done flag:

    {"v":1,"type":"obs","slot":n,"state":[...]}
    {"v":1,"type":"act","value":0|1}
    {"v":1,"type":"rew","value":r,"done":false}

Sender-role observations are [importance_index0, last_ack]; rewards are the
slot's ack bit. Receiver-role observations are [usefulness_index, age,
lateness]; rewards are the slot's effectiveness bit. If the internal agent
is effect-aware the session runs its own probing phase and solve before the
first served slot.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

from .policies import make_policy
from .simulator import (Engine, SimConfig, _probe_policies, fit_from_engine,
                        solve_aa, solve_sa)

PROTOCOL_VERSION = 1


class ProtocolError(RuntimeError):
    pass


def _write(stream, doc: dict):
    doc = {"v": PROTOCOL_VERSION, **doc}
    stream.write(json.dumps(doc) + "\n")
    stream.flush()


def _read_action(stream) -> int:
    line = stream.readline()
    if line == "":
        raise EOFError
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"unparseable message: {exc}") from exc
    if doc.get("v") != PROTOCOL_VERSION or doc.get("type") != "act" \
            or doc.get("value") not in (0, 1):
        raise ProtocolError(f"expected an action record, got: {line.strip()}")
    return int(doc["value"])


class _Bridge:
    """Callable handed to the engine loop; speaks the wire protocol."""

    def __init__(self, engine: Engine, role: str, reader, writer):
        self.engine = engine
        self.role = role
        self.reader = reader
        self.writer = writer
        self.slot_in_episode = 0

    def reward_of_last_slot(self) -> int:
        if self.role == "sa":
            return int(self.engine.eack_prev)
        return int(self.engine.last_effective)

    def __call__(self, *state) -> int:
        if self.slot_in_episode > 0:
            _write(self.writer, {"type": "rew",
                                 "value": self.reward_of_last_slot(),
                                 "done": False})
        self.slot_in_episode += 1
        _write(self.writer, {"type": "obs", "slot": self.engine.slot + 1,
                             "state": [int(x) for x in state]})
        return _read_action(self.reader)


@dataclass
class SessionReport:
    episodes: int
    slots: int
    total_reward: float


def serve(config: SimConfig, role: str, reader, writer,
          episode_slots: int = 512, episodes: int = 1) -> SessionReport:
    """Serve ``episodes`` episodes of ``episode_slots`` slots each.

    The internal agent's solved/configured policy persists across episodes;
    engine slot-state resets at each boundary while the random streams run
    on, so a session is reproducible from the config seed alone.
    """
    if role not in ("sa", "aa"):
        raise ValueError("role must be 'sa' or 'aa'")
    engine = Engine(config)

    # fit and solve for the internal side only
    internal_spec = config.aa_policy if role == "sa" else config.sa_policy
    internal_policy = None
    if internal_spec.effect_aware:
        sa_probe, aa_probe = _probe_policies(config)
        stats, log, _ = engine.run_phase(config.m_horizon, sa_probe, aa_probe,
                                         collect_log=True, collect_trace=False)
        estimates = fit_from_engine(engine, log, stats.window_open)
        if role == "sa":
            sol = solve_aa(engine, estimates)
            space = engine.aa_space
            internal_policy = make_policy(
                internal_spec, sol,
                encoder=lambda st: (st[0] * space.delta_max + st[1] - 1)
                * space.theta_cap + st[2] - 1)
        else:
            sol = solve_sa(engine, estimates)
            internal_policy = make_policy(internal_spec, sol,
                                          encoder=lambda st: st[0] * 2 + st[1])
        engine.reset_state()
    else:
        internal_policy = make_policy(internal_spec)

    bridge = _Bridge(engine, role, reader, writer)
    total_reward = 0.0
    slots_served = 0
    done_episodes = 0
    try:
        for _ in range(episodes):
            bridge.slot_in_episode = 0
            if role == "sa":
                stats, _, _ = engine.run_phase(
                    episode_slots, None, internal_policy,
                    collect_log=False, collect_trace=False,
                    external_role="sa", external_actions=bridge)
                total_reward += stats.eacks
            else:
                stats, _, _ = engine.run_phase(
                    episode_slots, internal_policy, None,
                    collect_log=False, collect_trace=False,
                    external_role="aa", external_actions=bridge)
                total_reward += stats.effective
            slots_served += stats.slots
            _write(writer, {"type": "rew", "value": bridge.reward_of_last_slot(),
                            "done": True})
            engine.reset_state()
            done_episodes += 1
    except EOFError:
        pass  # client hung up between slots; what was served stands
    except ProtocolError as exc:
        _write(writer, {"type": "err", "message": str(exc)})
        raise
    return SessionReport(done_episodes, slots_served, total_reward)


def serve_stdio(config: SimConfig, role: str, episode_slots: int = 512,
                episodes: int = 1) -> SessionReport:
    return serve(config, role, sys.stdin, sys.stdout, episode_slots, episodes)
