"""Concrete CMDPs for the two agents.

The sender model lives on (importance index, ack bit); the receiver model on
(received-usefulness index, age, lateness). ``build_aa_model`` follows the
pull-only transition family exactly; ``build_aa_decision_model`` extends it
with in-window push arrivals, which is what the solved query policy actually
faces in the coupled simulation (see build_aa_decision_model's docstring).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cmdp import CmdpModel, ModelError
from .goe import GoeParams, effectiveness_indicator, goe_evaluate, minimal_truncation_slack
from .levels import LEVEL_TOL, SourceDistribution, UsefulnessLevels


@dataclass(frozen=True)
class SaState:
    importance_index: int  # 1-based rank into the source levels
    eack: int

    def __post_init__(self):
        if self.importance_index < 1:
            raise ValueError("importance index is 1-based")
        if self.eack not in (0, 1):
            raise ValueError("eack is a bit")


@dataclass(frozen=True)
class AaState:
    usefulness_index: int  # 0 = the zero level
    aoi: int
    lateness: int

    def __post_init__(self):
        if self.usefulness_index < 0 or self.aoi < 1 or self.lateness < 1:
            raise ValueError("bad receiver state")


class SaStateSpace:
    """Index <-> (importance rank, ack bit) codec."""

    def __init__(self, level_count: int):
        self.level_count = level_count

    def __len__(self) -> int:
        return 2 * self.level_count

    def encode(self, state: SaState) -> int:
        if state.importance_index > self.level_count:
            raise ValueError("importance index out of range")
        return (state.importance_index - 1) * 2 + state.eack

    def decode(self, idx: int) -> SaState:
        return SaState(idx // 2 + 1, idx % 2)

    def labels(self) -> tuple:
        return tuple((s.importance_index, s.eack)
                     for s in (self.decode(i) for i in range(len(self))))


class AaStateSpace:
    """Index <-> (usefulness index, age, lateness) codec."""

    def __init__(self, level_count: int, delta_max: int, theta_cap: int):
        self.level_count = level_count
        self.delta_max = delta_max
        self.theta_cap = theta_cap

    def __len__(self) -> int:
        return self.level_count * self.delta_max * self.theta_cap

    def encode(self, state: AaState) -> int:
        if (state.usefulness_index >= self.level_count
                or state.aoi > self.delta_max or state.lateness > self.theta_cap):
            raise ValueError("receiver state out of range")
        return ((state.usefulness_index * self.delta_max + (state.aoi - 1))
                * self.theta_cap + (state.lateness - 1))

    def decode(self, idx: int) -> AaState:
        theta = idx % self.theta_cap + 1
        rest = idx // self.theta_cap
        delta = rest % self.delta_max + 1
        return AaState(rest // self.delta_max, delta, theta)

    def labels(self) -> tuple:
        return tuple((s.usefulness_index, s.aoi, s.lateness)
                     for s in (self.decode(i) for i in range(len(self))))


def build_sa_model(source: SourceDistribution, target_pmf: np.ndarray,
                   target_levels: UsefulnessLevels, params: GoeParams,
                   budget: float, discount: float = 0.75,
                   unit_cost: float | None = None,
                   literal_cost: bool = False) -> CmdpModel:
    """Sender CMDP over (importance rank, ack bit).

    The chance of seeing an ack after sending importance v is the CDF of the
    believed target-usefulness distribution at v; dropping the update leaves
    only the target-level-0 mass. Reward is the next ack bit.
    """
    target_pmf = np.asarray(target_pmf, dtype=float)
    if target_pmf.shape != (len(target_levels),):
        raise ModelError("target pmf length must match the target level set")
    if abs(target_pmf.sum() - 1.0) > 1e-9 or (target_pmf < -1e-12).any():
        raise ModelError("target pmf must be a distribution")
    space = SaStateSpace(len(source.levels))
    n = len(space)
    levels = np.asarray(source.levels.levels)
    targets = np.asarray(target_levels.levels)

    def ack_prob(v: float, act: int) -> float:
        reach = act * v
        return float(target_pmf[targets <= reach + LEVEL_TOL].sum())

    p = np.zeros((n, 2, n))
    r = np.zeros((n, 2, n))
    for s in range(n):
        st = space.decode(s)
        v = levels[st.importance_index - 1]
        for act in (0, 1):
            p_ack = ack_prob(v, act)
            for i_next, pv in enumerate(source.pmf):
                for ack_next, p_e in ((1, p_ack), (0, 1.0 - p_ack)):
                    s_next = space.encode(SaState(i_next + 1, ack_next))
                    p[s, act, s_next] = pv * p_e
                    r[s, act, s_next] = float(ack_next)
    cost_unit = (params.cost_tx if unit_cost is None else unit_cost)
    costs = np.array([0.0, 1.0 if literal_cost else cost_unit])
    return CmdpModel(p, r, costs, discount, budget, state_labels=space.labels())


def build_aa_model(received_pmf: np.ndarray, received_levels: UsefulnessLevels,
                   p_erasure: float, params: GoeParams, budget: float,
                   discount: float = 0.75, unit_cost: float | None = None,
                   literal_cost: bool = False) -> CmdpModel:
    """Receiver CMDP over (usefulness index, age, lateness), pull-only.

    Not querying ages both counters; querying lands at lateness 1, either
    keeping the stored usefulness (erasure) or drawing a fresh one from the
    received-usefulness pmf with age reset. Rewards grade the landed state.
    """
    q = np.asarray(received_pmf, dtype=float)
    if q.shape != (len(received_levels),):
        raise ModelError("received pmf length must match the level set")
    if abs(q.sum() - 1.0) > 1e-9 or (q < -1e-12).any():
        raise ModelError("received pmf must be a distribution")
    space = AaStateSpace(len(received_levels), params.delta_max, params.theta_cap)
    n = len(space)
    levels = np.asarray(received_levels.levels)

    def land_reward(j: int, delta: int, theta: int, act: int) -> float:
        goe = goe_evaluate(levels[j], delta, theta, 1, act, params)
        return float(effectiveness_indicator(goe, theta, params))

    p = np.zeros((n, 2, n))
    r = np.zeros((n, 2, n))
    for s in range(n):
        st = space.decode(s)
        d_next = min(st.aoi + 1, params.delta_max)
        # stay: both counters age
        t_stay = min(st.lateness + 1, params.theta_cap)
        s_stay = space.encode(AaState(st.usefulness_index, d_next, t_stay))
        p[s, 0, s_stay] += 1.0
        r[s, 0, s_stay] = land_reward(st.usefulness_index, d_next, t_stay, 0)
        # pull, erased: keep the stored usefulness, lateness resets
        s_er = space.encode(AaState(st.usefulness_index, d_next, 1))
        p[s, 1, s_er] += p_erasure
        r[s, 1, s_er] = land_reward(st.usefulness_index, d_next, 1, 1)
        # pull, fresh: usefulness redrawn, both counters reset
        for j_next, qj in enumerate(q):
            s_fr = space.encode(AaState(j_next, 1, 1))
            p[s, 1, s_fr] += (1.0 - p_erasure) * qj
            r[s, 1, s_fr] = land_reward(j_next, 1, 1, 1)
    cost_unit = (params.cost_query if unit_cost is None else unit_cost)
    costs = np.array([0.0, 1.0 if literal_cost else cost_unit])
    return CmdpModel(p, r, costs, discount, budget, state_labels=space.labels())


def build_aa_decision_model(received_pmf: np.ndarray,
                            received_levels: UsefulnessLevels,
                            push_success: float, params: GoeParams,
                            budget: float, discount: float = 0.75,
                            unit_cost: float | None = None) -> CmdpModel:
    """Receiver decision CMDP with the push channel folded in.

    Under the pull-only family every positive reward sits on a fresh pull, so
    the value function is constant across states and the solved policy
    degenerates to a query-rate mixer. The coupled system is richer: sender
    pushes land whenever the action window is open, and they land at the
    current lateness. This variant adds those arrivals, with ``push_success``
    the estimated per-slot probability that an update crosses (sender
    transmitting and no erasure), and uses the arrival-conditional usefulness
    distribution for landed values. Rewards sit only on arrivals, matching
    the effectiveness bookkeeping of the simulator.
    """
    q = np.asarray(received_pmf, dtype=float)
    if q.shape != (len(received_levels),):
        raise ModelError("received pmf length must match the level set")
    if not 0.0 <= push_success <= 1.0:
        raise ModelError("push_success must be a probability")
    positive = q.copy()
    positive[0] = 0.0
    q_arrival = positive / positive.sum() if positive.sum() > 0 else positive
    space = AaStateSpace(len(received_levels), params.delta_max, params.theta_cap)
    n = len(space)
    levels = np.asarray(received_levels.levels)

    def arrival_reward(j: int, theta: int, act: int) -> float:
        goe = goe_evaluate(levels[j], 1, theta, 1, act, params)
        return float(effectiveness_indicator(goe, theta, params))

    p = np.zeros((n, 2, n))
    r = np.zeros((n, 2, n))
    for s in range(n):
        st = space.decode(s)
        d_next = min(st.aoi + 1, params.delta_max)
        t_stay = min(st.lateness + 1, params.theta_cap)
        # no query: a push may land at the current lateness if in-window
        p_land = push_success if params.window_admits(st.lateness) else 0.0
        s_idle = space.encode(AaState(st.usefulness_index, d_next, t_stay))
        p[s, 0, s_idle] += 1.0 - p_land
        for j_next, qj in enumerate(q_arrival):
            if qj == 0.0:
                continue
            s_push = space.encode(AaState(j_next, 1, t_stay))
            p[s, 0, s_push] += p_land * qj
            r[s, 0, s_push] = arrival_reward(j_next, st.lateness, 0)
        # query: lateness resets; arrival needs the sender and the channel
        s_miss = space.encode(AaState(st.usefulness_index, d_next, 1))
        p[s, 1, s_miss] += 1.0 - push_success
        for j_next, qj in enumerate(q_arrival):
            if qj == 0.0:
                continue
            s_fr = space.encode(AaState(j_next, 1, 1))
            p[s, 1, s_fr] += push_success * qj
            r[s, 1, s_fr] = arrival_reward(j_next, 1, 1)
    cost_unit = (params.cost_query if unit_cost is None else unit_cost)
    costs = np.array([0.0, cost_unit])
    return CmdpModel(p, r, costs, discount, budget, state_labels=space.labels())


@dataclass(frozen=True)
class TruncationReport:
    delta_vacuous: bool
    theta_vacuous: bool
    delta_min_eps: float | None
    theta_min_eps: float | None
    delta_ok: bool
    theta_ok: bool


def validate_truncation(params: GoeParams, eps_delta: float,
                        eps_theta: float) -> TruncationReport:
    """Check that capping age/lateness distorts the grade by at most eps."""
    d_min = minimal_truncation_slack(params, "delta")
    t_min = minimal_truncation_slack(params, "theta")
    return TruncationReport(
        delta_vacuous=d_min is None,
        theta_vacuous=t_min is None,
        delta_min_eps=d_min,
        theta_min_eps=t_min,
        delta_ok=(d_min is None or eps_delta >= d_min - 1e-12),
        theta_ok=(t_min is None or eps_theta >= t_min - 1e-12),
    )
