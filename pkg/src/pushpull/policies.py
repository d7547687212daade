"""Decision policies: solved-table lookup, periodic, and Markov-modulated.

Runtime policy objects keep their own cursor state (schedule counter, chain
state, mixture draws) so one object drives exactly one simulated agent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cmdp import PolicySolution

MARKOV_SELF_STAY = 0.9  # self-transition of the idle chain state

EFFECT_AWARE = "effect_aware"
PERIODIC = "periodic"
MARKOVIAN = "markovian"


@dataclass(frozen=True)
class PolicySpec:
    """Config-level description of an agent policy."""

    kind: str
    rate: float = 0.8

    def __post_init__(self):
        if self.kind not in (EFFECT_AWARE, PERIODIC, MARKOVIAN):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind != EFFECT_AWARE and not 0.0 <= self.rate <= 1.0:
            raise ValueError("controlled rate must be in [0, 1]")

    @property
    def effect_aware(self) -> bool:
        return self.kind == EFFECT_AWARE


class PeriodicPolicy:
    """Deterministic rate-tracking schedule.

    Emits whenever the running fraction of past emissions has fallen to or
    below the controlled rate, so after n slots the emitted fraction differs
    from the rate by at most 1/n.
    """

    def __init__(self, rate: float):
        if not 0.0 <= rate <= 1.0:
            raise ValueError("rate must be in [0, 1]")
        self.rate = rate
        self.slots = 0
        self.emitted = 0

    def decide(self, state=None, rng: np.random.Generator | None = None) -> int:
        act = 1 if self.emitted <= self.rate * self.slots + 1e-9 else 0
        if self.rate == 0.0:
            act = 0
        self.slots += 1
        self.emitted += act
        return act


def markov_rate_to_p11(rate: float, p00: float = MARKOV_SELF_STAY) -> float:
    """Busy-state self-transition giving the requested long-run action rate."""
    if rate > 1.0:
        raise ValueError("rate must be at most 1")
    if rate >= 1.0:
        return 1.0
    floor = (1.0 - p00) / (1.0 - p00 + 1.0)  # stationary rate when p11 = 0
    if rate < floor - 1e-12:
        raise ValueError(f"rate {rate} below the achievable floor {floor:.4f}")
    return 1.0 - (1.0 - p00) * (1.0 - rate) / rate


class MarkovPolicy:
    """Two-state chain; the decision is the chain state after stepping."""

    def __init__(self, rate: float, p00: float = MARKOV_SELF_STAY):
        self.p00 = p00
        self.p11 = markov_rate_to_p11(rate, p00)
        self.state = 0  # idle start; the chain mixes within tens of slots

    def decide(self, state=None, rng: np.random.Generator | None = None) -> int:
        stay = self.p00 if self.state == 0 else self.p11
        u = rng.random()
        if self.state == 0:
            self.state = 0 if u < stay else 1
        else:
            self.state = 1 if u < stay else 0
        return self.state


class EffectAwarePolicy:
    """Table lookup into a solved policy, sampling the mixture per slot."""

    def __init__(self, solution: PolicySolution, encoder):
        self.solution = solution
        self.encoder = encoder

    def decide(self, state, rng: np.random.Generator | None = None) -> int:
        idx = self.encoder(state)
        if idx < 0 or idx >= self.solution.policy_low.size:
            raise IndexError(f"state {state!r} encodes outside the table")
        return self.decide_idx(idx, rng)

    def decide_idx(self, idx: int, rng) -> int:
        sol = self.solution
        if sol.deterministic or sol.mix_prob >= 1.0:
            return int(sol.policy_low[idx])
        if sol.mix_prob <= 0.0:
            return int(sol.policy_high[idx])
        table = sol.policy_low if rng.random() < sol.mix_prob else sol.policy_high
        return int(table[idx])


# any of the three runtime policy flavors
DecisionPolicy = PeriodicPolicy | MarkovPolicy | EffectAwarePolicy


def make_policy(spec: PolicySpec, solution: PolicySolution | None = None,
                encoder=None) -> "DecisionPolicy":
    if spec.kind == PERIODIC:
        return PeriodicPolicy(spec.rate)
    if spec.kind == MARKOVIAN:
        return MarkovPolicy(spec.rate)
    if solution is None or encoder is None:
        raise ValueError("effect-aware policy needs a solution and an encoder")
    return EffectAwarePolicy(solution, encoder)


@dataclass(frozen=True)
class AxisThresholds:
    """Per-cell activation boundaries along one state axis."""

    axis: str
    shape: tuple[int, ...]          # sizes of the remaining axes
    thresholds: np.ndarray          # min activating coordinate, inf if none
    monotone: bool                  # every slice is a clean 0...01...1 step


@dataclass(frozen=True)
class ThresholdReport:
    axes: tuple[str, ...]
    table_shape: tuple[int, ...]
    per_axis: dict[str, AxisThresholds] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "format": "threshold-report",
            "version": 1,
            "axes": list(self.axes),
            "table_shape": list(self.table_shape),
            "per_axis": {
                name: {
                    "shape": list(t.shape),
                    "thresholds": [None if not np.isfinite(x) else float(x)
                                   for x in t.thresholds.ravel()],
                    "monotone": t.monotone,
                }
                for name, t in self.per_axis.items()
            },
        }
        return json.dumps(doc)


def extract_thresholds(table: np.ndarray, axes: tuple[str, ...]) -> ThresholdReport:
    """Activation thresholds of a deterministic 0/1 policy along each axis.

    ``table`` is the policy reshaped to one dimension per state component,
    1-based coordinate convention in the reported thresholds. An axis whose
    slices are not all step functions is flagged non-monotone (thresholds
    still report the first activation).
    """
    table = np.asarray(table)
    if table.ndim != len(axes):
        raise ValueError("one axis name per table dimension")
    report: dict[str, AxisThresholds] = {}
    for ax, name in enumerate(axes):
        moved = np.moveaxis(table, ax, -1)
        flat = moved.reshape(-1, table.shape[ax])
        ths = np.full(flat.shape[0], np.inf)
        monotone = True
        for i, row in enumerate(flat):
            on = np.nonzero(row == 1)[0]
            if on.size:
                ths[i] = on[0] + 1  # 1-based
                if not (row[on[0]:] == 1).all():
                    monotone = False
        report[name] = AxisThresholds(
            axis=name,
            shape=moved.shape[:-1],
            thresholds=ths.reshape(moved.shape[:-1]),
            monotone=monotone,
        )
    return ThresholdReport(axes, table.shape, report)


def rebuild_from_thresholds(th: AxisThresholds, axis_size: int,
                            axes: tuple[str, ...]) -> np.ndarray:
    """Reconstruct a step policy from one axis' thresholds."""
    coords = np.arange(1, axis_size + 1)
    grid = (coords[None, :] >= th.thresholds.reshape(-1, 1)).astype(np.int64)
    table = grid.reshape(th.shape + (axis_size,))
    ax = axes.index(th.axis)
    return np.moveaxis(table, -1, ax)


def lookup_map_json(table: np.ndarray, axes: tuple[str, ...],
                    axis_values: dict[str, list], agent: str,
                    table_high: np.ndarray | None = None,
                    mix_prob: float | None = None) -> str:
    """Plot-ready lookup map: axis grids plus the per-cell action.

    A randomized solution exports both component tables plus the mixing
    probability of the first.
    """
    doc = {
        "format": "lookup-map",
        "version": 1,
        "agent": agent,
        "axes": [{"name": name, "values": list(axis_values[name])}
                 for name in axes],
        "actions": np.asarray(table).astype(int).ravel().tolist(),
        "order": "C",
    }
    if table_high is not None:
        doc["actions_high"] = np.asarray(table_high).astype(int).ravel().tolist()
        doc["mix_prob"] = mix_prob
    return json.dumps(doc)
