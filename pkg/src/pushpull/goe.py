"""Grade-of-effectiveness metric, effectiveness indicator, target usefulness.

The deployed metric grades a slot as

    usefulness / (age * lateness) - alpha*cost_tx - beta*cost_query - cost_avail

where age and lateness are 1-based slot counters. Two special metric shapes
are available as presets: an age-only penalty (``qaoi``) and a pure-value
grade with the time factors disabled (``voi``).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .levels import UsefulnessLevels

STRICT = "strict"
INCLUSIVE = "inclusive"

METRIC_RATIO = "goe_ratio"
METRIC_QAOI = "qaoi"
METRIC_VOI = "voi"


@dataclass(frozen=True)
class GoeParams:
    """Per-slot grading constants and the action-window geometry."""

    cost_tx: float = 0.1
    cost_query: float = 0.1
    cost_avail: float = 0.01
    goe_target: float = 0.6
    delta_max: int = 10
    theta_max: int = 5
    window_rule: str = STRICT
    metric: str = METRIC_RATIO

    def __post_init__(self):
        if self.cost_tx < 0 or self.cost_query < 0 or self.cost_avail < 0:
            raise ValueError("costs must be non-negative")
        if self.delta_max < 1 or self.theta_max < 1:
            raise ValueError("delta_max and theta_max must be >= 1")
        if self.window_rule not in (STRICT, INCLUSIVE):
            raise ValueError(f"unknown window rule {self.window_rule!r}")
        if self.metric not in (METRIC_RATIO, METRIC_QAOI, METRIC_VOI):
            raise ValueError(f"unknown metric {self.metric!r}")

    @property
    def theta_cap(self) -> int:
        """Largest lateness value tracked as state."""
        return self.theta_max + (1 if self.window_rule == INCLUSIVE else 0)

    def window_admits(self, theta: int) -> bool:
        if self.window_rule == STRICT:
            return theta < self.theta_max
        return theta <= self.theta_max

    def freshness_factor(self, v_hat: float, delta: int) -> float:
        """Age penalty g applied to the received usefulness."""
        if self.metric == METRIC_QAOI:
            return -float(delta)
        if self.metric == METRIC_VOI:
            return v_hat
        return v_hat / delta

    def lateness_factor(self, theta: int) -> float:
        if self.metric == METRIC_RATIO:
            return 1.0 / theta
        return 1.0  # time factor disabled under the qaoi/voi variants

    def qaoi_preset(self) -> "GoeParams":
        return replace(self, metric=METRIC_QAOI, theta_max=1,
                       cost_tx=0.0, cost_query=0.0, cost_avail=0.0)

    def voi_preset(self) -> "GoeParams":
        return replace(self, metric=METRIC_VOI)


def goe_evaluate(v_hat: float, delta: int, theta: int, alpha: int, beta: int,
                 params: GoeParams) -> float:
    """Grade a slot given its (usefulness, age, lateness) and action bits."""
    if delta < 1 or theta < 1:
        raise ValueError("age and lateness are 1-based; got values below 1")
    base = params.freshness_factor(v_hat, delta) * params.lateness_factor(theta)
    if params.metric == METRIC_QAOI:
        return base
    return (base
            - alpha * params.cost_tx
            - beta * params.cost_query
            - params.cost_avail)


def effectiveness_indicator(goe: float, theta: int, params: GoeParams) -> int:
    """1 iff the grade meets the target and the action window admits theta."""
    return int(goe >= params.goe_target and params.window_admits(theta))


def target_usefulness(delta: int, theta: int, alpha: int, beta: int,
                      params: GoeParams, received_levels: UsefulnessLevels) -> float:
    """Smallest received level that would grade as effective right now.

    Falls back to the largest level when the window is shut or no level
    clears the target grade.
    """
    if received_levels.kind != "received":
        raise ValueError("target_usefulness expects the received level set")
    top = received_levels.levels[-1]
    if not params.window_admits(theta):
        return top
    for lv in received_levels.levels:  # exhaustive ascending scan
        if goe_evaluate(lv, delta, theta, alpha, beta, params) >= params.goe_target:
            return lv
    return top


def minimal_truncation_slack(params: GoeParams, axis: str) -> float | None:
    """Smallest eps with g(max-1) <= (1+eps) * g(max) on the given axis.

    Returns None when the axis maximum is 1 (check vacuous). Evaluated at
    unit usefulness; the ratio is usefulness-free for the supported metrics.
    """
    if axis == "delta":
        m = params.delta_max
        if m == 1:
            return None
        g_hi = params.freshness_factor(1.0, m - 1)
        g_max = params.freshness_factor(1.0, m)
    elif axis == "theta":
        m = params.theta_max
        if m == 1:
            return None
        g_hi = params.lateness_factor(m - 1)
        g_max = params.lateness_factor(m)
    else:
        raise ValueError(f"unknown axis {axis!r}")
    if g_max == g_hi:
        return 0.0
    if g_max == 0:
        return float("inf")
    # relative grade distortion between the last two tracked values
    return abs(g_hi - g_max) / abs(g_max)
