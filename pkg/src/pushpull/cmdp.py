"""Finite constrained-MDP solver.

Inner loop: discounted value iteration with a span-seminorm stopping rule and
a midpoint tail correction, so the returned vector is a near fixed point.
Outer loop: bisection on the Lagrange multiplier attached to the action cost;
when the cost constraint ends up slack the result mixes the two bracket
policies so the mixture cost meets the budget exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

STATIONARY_AVERAGE = "stationary_average"
DISCOUNTED_NORMALIZED = "discounted_normalized"

_ROW_TOL = 1e-9
_POWER_ITER_CAP = 10**6


class ModelError(ValueError):
    """Raised for structurally invalid models (bad rows, shapes, budgets)."""


class InfeasibleError(RuntimeError):
    """Raised when no policy can satisfy the cost budget."""


@dataclass(frozen=True)
class CmdpModel:
    """Finite CMDP: transition/reward tensors, per-action costs, a budget."""

    transition: np.ndarray  # [S, A, S]
    reward: np.ndarray      # [S, A, S]
    action_cost: np.ndarray  # [A]
    discount: float
    budget: float
    state_labels: tuple = ()

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=float)
        r = np.asarray(self.reward, dtype=float)
        c = np.asarray(self.action_cost, dtype=float)
        if p.ndim != 3 or p.shape[0] != p.shape[2]:
            raise ModelError("transition tensor must have shape [S, A, S]")
        if r.shape != p.shape:
            raise ModelError("reward tensor must match the transition shape")
        if c.shape != (p.shape[1],):
            raise ModelError("action_cost must have one entry per action")
        if (p < -_ROW_TOL).any():
            raise ModelError("negative transition probability")
        rowsum = p.sum(axis=2)
        if np.abs(rowsum - 1.0).max() > _ROW_TOL:
            raise ModelError("transition rows must sum to 1")
        if (r < 0).any():
            raise ModelError("rewards must be bounded below by 0")
        if (c < 0).any():
            raise ModelError("action costs must be non-negative")
        if not 0.0 <= self.discount < 1.0:
            raise ModelError("discount must lie in [0, 1)")
        if self.budget < 0:
            raise ModelError("budget must be non-negative")
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "action_cost", c)

    @property
    def state_count(self) -> int:
        return self.transition.shape[0]

    @property
    def action_count(self) -> int:
        return self.transition.shape[1]

    def expected_reward(self) -> np.ndarray:
        """[S, A] one-step expected reward."""
        return (self.transition * self.reward).sum(axis=2)

    def to_json(self) -> str:
        doc = {
            "format": "cmdp-model",
            "version": 1,
            "state_count": self.state_count,
            "action_count": self.action_count,
            "discount": self.discount,
            "budget": self.budget,
            "action_cost": self.action_cost.tolist(),
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "state_labels": [list(map(float, lab)) if isinstance(lab, tuple) else lab
                             for lab in self.state_labels],
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "CmdpModel":
        doc = json.loads(text)
        if doc.get("format") != "cmdp-model" or doc.get("version") != 1:
            raise ModelError("unrecognized model document")
        return CmdpModel(
            transition=np.array(doc["transition"], dtype=float),
            reward=np.array(doc["reward"], dtype=float),
            action_cost=np.array(doc["action_cost"], dtype=float),
            discount=float(doc["discount"]),
            budget=float(doc["budget"]),
            state_labels=tuple(tuple(lab) if isinstance(lab, list) else lab
                               for lab in doc.get("state_labels", ())),
        )


def span(v: np.ndarray) -> float:
    """Span seminorm: max(v) - min(v)."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("span of an empty vector is undefined")
    return float(v.max() - v.min())


def value_iterate(model: CmdpModel, mu: float, eps_pi: float,
                  max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray, int]:
    """Greedy policy and value for the net reward r - mu*c at discount lambda.

    Stops when the span of successive value differences drops below eps_pi,
    then extrapolates the geometric tail with the midpoint of the last
    increment. Ties in the argmax resolve to the lowest action index.
    """
    if eps_pi <= 0:
        raise ValueError("eps_pi must be positive")
    lam = model.discount
    s_count, a_count = model.state_count, model.action_count
    exp_r = model.expected_reward() - mu * model.action_cost[None, :]
    p_flat = model.transition.reshape(s_count * a_count, s_count)
    v = np.zeros(s_count)
    policy = np.zeros(s_count, dtype=np.int64)
    iters = 0
    for iters in range(1, max_iter + 1):
        q = exp_r + lam * (p_flat @ v).reshape(s_count, a_count)
        v_next = q.max(axis=1)
        policy = q.argmax(axis=1)  # argmax picks the first (lowest) maximizer
        diff = v_next - v
        v = v_next
        if span(diff) < eps_pi:
            break
    else:
        raise RuntimeError("value iteration did not converge")
    if lam > 0:
        v = v + (lam / (1.0 - lam)) * ((diff.max() + diff.min()) / 2.0)
    return policy, v, iters


def induced_chain(model: CmdpModel, policy: np.ndarray) -> np.ndarray:
    """Transition matrix of the Markov chain a deterministic policy induces."""
    idx = np.arange(model.state_count)
    return model.transition[idx, np.asarray(policy, dtype=int), :]


def stationary_distribution(model: CmdpModel, policy: np.ndarray) -> tuple[np.ndarray, bool]:
    """Stationary distribution of the induced chain.

    Solves the linear system directly; on a singular/ill-conditioned system
    falls back to damped power iteration (flagged by the second return).
    """
    p = induced_chain(model, policy)
    n = p.shape[0]
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        d = np.linalg.solve(a, b)
        if (d > -1e-9).all() and abs(d.sum() - 1.0) < 1e-6:
            d = np.clip(d, 0.0, None)
            return d / d.sum(), False
    except np.linalg.LinAlgError:
        pass
    # damped iteration keeps periodic chains convergent
    damped = 0.5 * (np.eye(n) + p)
    d = np.full(n, 1.0 / n)
    for _ in range(_POWER_ITER_CAP):
        d_next = d @ damped
        if np.abs(d_next - d).max() < 1e-13:
            d = d_next
            break
        d = d_next
    return d / d.sum(), True


def policy_cost(model: CmdpModel, policy, horizon_mode: str = STATIONARY_AVERAGE,
                mix_prob: float | None = None) -> float:
    """Long-run cost of a deterministic policy or a two-policy mixture.

    A mixture is given as ``policy=(low, high)`` plus ``mix_prob`` eta; its
    cost is the eta-weighted combination of the component costs.
    """
    if mix_prob is not None:
        low, high = policy
        return (mix_prob * policy_cost(model, low, horizon_mode)
                + (1.0 - mix_prob) * policy_cost(model, high, horizon_mode))
    policy = np.asarray(policy, dtype=int)
    per_state = model.action_cost[policy]
    if horizon_mode == STATIONARY_AVERAGE:
        d, _ = stationary_distribution(model, policy)
        return float(d @ per_state)
    if horizon_mode == DISCOUNTED_NORMALIZED:
        disc = _discounted_state_occupancy(model, policy)
        return float(disc @ per_state)
    raise ValueError(f"unknown horizon mode {horizon_mode!r}")


def policy_value(model: CmdpModel, policy, horizon_mode: str = STATIONARY_AVERAGE,
                 mix_prob: float | None = None) -> float:
    """Long-run reward of a policy, in the same normalization as the cost."""
    if mix_prob is not None:
        low, high = policy
        return (mix_prob * policy_value(model, low, horizon_mode)
                + (1.0 - mix_prob) * policy_value(model, high, horizon_mode))
    policy = np.asarray(policy, dtype=int)
    idx = np.arange(model.state_count)
    r_pi = model.expected_reward()[idx, policy]
    if horizon_mode == STATIONARY_AVERAGE:
        d, _ = stationary_distribution(model, policy)
        return float(d @ r_pi)
    if horizon_mode == DISCOUNTED_NORMALIZED:
        disc = _discounted_state_occupancy(model, policy)
        return float(disc @ r_pi)
    raise ValueError(f"unknown horizon mode {horizon_mode!r}")


def _discounted_state_occupancy(model: CmdpModel, policy: np.ndarray) -> np.ndarray:
    """Normalized discounted state occupancy from a uniform start.

    Computed iteratively (geometric smoothing of the chain's step
    distributions) so it shares no code path with direct linear solves.
    """
    p = induced_chain(model, policy)
    lam = model.discount
    n = p.shape[0]
    d = np.full(n, 1.0 / n)
    occ = np.zeros(n)
    weight = 1.0
    total = 0.0
    # sum_{t>=0} lam^t d_t, truncated when the tail is negligible
    while weight > 1e-14:
        occ += weight * d
        total += weight
        d = d @ p
        weight *= lam
    return occ / total


@dataclass
class SolveReport:
    bisection_steps: int = 0
    value_iterations: int = 0
    final_span: float = 0.0
    early_exit: bool = False
    power_iteration_fallback: bool = False
    mu_bracket: tuple[float, float] = (0.0, 0.0)


@dataclass
class PolicySolution:
    """Solver output: two bracket policies mixed with probability eta."""

    policy_low: np.ndarray   # argmax policy at the lower multiplier
    policy_high: np.ndarray  # argmax policy at the upper multiplier
    mix_prob: float          # probability of following policy_low
    multiplier: float
    value: np.ndarray
    report: SolveReport = field(default_factory=SolveReport)

    @property
    def deterministic(self) -> bool:
        return bool((self.policy_low == self.policy_high).all())

    def expected_cost(self, model: CmdpModel,
                      horizon_mode: str = STATIONARY_AVERAGE) -> float:
        return policy_cost(model, (self.policy_low, self.policy_high),
                           horizon_mode, mix_prob=self.mix_prob)

    def expected_value(self, model: CmdpModel,
                       horizon_mode: str = STATIONARY_AVERAGE) -> float:
        return policy_value(model, (self.policy_low, self.policy_high),
                            horizon_mode, mix_prob=self.mix_prob)

    def to_json(self) -> str:
        return json.dumps({
            "format": "policy-solution",
            "version": 1,
            "policy_low": self.policy_low.tolist(),
            "policy_high": self.policy_high.tolist(),
            "mix_prob": self.mix_prob,
            "multiplier": self.multiplier,
            "value": self.value.tolist(),
        })


def solve(model: CmdpModel, eps_mu: float = 1e-4, eps_pi: float = 1e-4,
          mu_hi_init: float = 10.0, horizon_mode: str = STATIONARY_AVERAGE,
          eta_default: float = 0.5) -> PolicySolution:
    """Constrained solve: bisection on the multiplier around the cost budget.

    The unconstrained (mu=0) policy is returned outright when it already
    meets the budget. Otherwise mu is bisected between the infeasible and
    feasible sides until the bracket closes below eps_mu; if the final cost
    is strictly inside the budget the two bracket policies are mixed so the
    modelled cost hits the budget exactly (eta_default applies only when the
    bracket costs coincide).
    """
    if eps_mu <= 0:
        raise ValueError("eps_mu must be positive")
    report = SolveReport()
    c_max = model.budget

    def cost_of(policy) -> float:
        if horizon_mode == STATIONARY_AVERAGE:
            d, fell_back = stationary_distribution(model, np.asarray(policy, int))
            if fell_back:
                report.power_iteration_fallback = True
            return float(d @ model.action_cost[np.asarray(policy, int)])
        return policy_cost(model, policy, horizon_mode)

    policy0, value0, it0 = value_iterate(model, 0.0, eps_pi)
    report.value_iterations += it0
    cost0 = cost_of(policy0)
    if cost0 <= c_max + 1e-12:
        report.early_exit = True
        return PolicySolution(policy0, policy0.copy(), 1.0, 0.0, value0, report)

    if model.action_cost.min() > c_max + 1e-12:
        raise InfeasibleError("cheapest action already exceeds the budget")

    mu_lo, mu_hi = 0.0, mu_hi_init
    policy_lo = policy0
    # grow the bracket until the high end is feasible
    while True:
        policy_hi, value_hi, it = value_iterate(model, mu_hi, eps_pi)
        report.value_iterations += it
        if cost_of(policy_hi) <= c_max + 1e-12:
            break
        mu_hi *= 2.0
        if mu_hi > 2.0**20:
            raise InfeasibleError("no feasible policy below the multiplier cap")

    mu = mu_hi
    value = value_hi
    while abs(mu_hi - mu_lo) >= eps_mu:
        mu = 0.5 * (mu_lo + mu_hi)
        policy_mu, value, it = value_iterate(model, mu, eps_pi)
        report.value_iterations += it
        report.bisection_steps += 1
        if cost_of(policy_mu) >= c_max - 1e-12:
            mu_lo, policy_lo = mu, policy_mu
        else:
            mu_hi, policy_hi = mu, policy_mu
    report.mu_bracket = (mu_lo, mu_hi)

    cost_lo = cost_of(policy_lo)
    cost_hi = cost_of(policy_hi)
    if abs(cost_lo - cost_hi) < 1e-12:
        eta = 1.0 if abs(cost_lo - c_max) < 1e-9 else eta_default
    else:
        eta = (c_max - cost_hi) / (cost_lo - cost_hi)
        eta = float(np.clip(eta, 0.0, 1.0))
    if abs(cost_lo - c_max) < 1e-12:
        # constraint binds exactly at the lower bracket: deterministic
        return PolicySolution(policy_lo, policy_lo.copy(), 1.0, mu, value, report)
    return PolicySolution(policy_lo, policy_hi, eta, mu, value, report)


@dataclass
class ReachabilityReport:
    """Structural connectivity of a model under the any-action edge graph."""

    kind: str  # "accessible" | "weakly_accessible" | "neither"
    core: tuple[int, ...]
    transient: tuple[int, ...]
    closed_class_count: int

    @property
    def accessible(self) -> bool:
        return self.kind == "accessible"

    @property
    def weakly_accessible(self) -> bool:
        return self.kind in ("accessible", "weakly_accessible")


def _strongly_connected_components(adj: list[list[int]]) -> list[list[int]]:
    """Tarjan SCC, iterative."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for i in range(pi, len(adj[v])):
                w = adj[v][i]
                if index[w] == -1:
                    work[-1] = (v, i + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def check_reachability(model: CmdpModel, prob_tol: float = 1e-12) -> ReachabilityReport:
    """Classify the state graph built from all positive-probability edges.

    accessible: one strongly connected component covering every state.
    weakly_accessible: a unique closed communicating class that every state
    can reach; the remaining states are reported as transient.
    """
    p_any = model.transition.max(axis=1)  # edge if any action moves s -> s'
    n = model.state_count
    adj = [list(np.nonzero(p_any[s] > prob_tol)[0]) for s in range(n)]
    comps = _strongly_connected_components(adj)
    if len(comps) == 1:
        states = tuple(range(n))
        return ReachabilityReport("accessible", states, (), 1)

    comp_id = np.empty(n, dtype=int)
    for ci, comp in enumerate(comps):
        for s in comp:
            comp_id[s] = ci
    closed = []
    for ci, comp in enumerate(comps):
        leaves = any(comp_id[w] != ci for s in comp for w in adj[s])
        if not leaves:
            closed.append(ci)

    if len(closed) == 1:
        core = sorted(comps[closed[0]])
        transient = sorted(set(range(n)) - set(core))
        # with a single closed class every other component drains into it
        return ReachabilityReport("weakly_accessible", tuple(core),
                                  tuple(transient), 1)
    return ReachabilityReport("neither", (), tuple(range(n)), len(closed))
