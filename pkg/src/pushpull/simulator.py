"""Slot-level engine coupling the sender, the receiver, and both channels.

A run has two phases. The probing phase sends at the highest budget-feasible
rate while the receiver queries per its configured (or bootstrap) schedule;
its log fits the empirical distributions. The decision phase then executes
the configured policies, with solved tables for effect-aware agents.

Per-slot bookkeeping uses 1-based age/lateness with in-slot resets: a query
sets the slot's lateness to 1, an arrival sets the slot's age to 1, and the
slot right after either event still grades at 1 before the counters resume
climbing. An update arrives only when the sender transmits, the forward
channel cooperates, and the action window admits the slot; effectiveness is
counted on arrival slots whose grade clears the target.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .agents import (AaStateSpace, SaStateSpace, build_aa_decision_model,
                     build_sa_model)
from .cmdp import PolicySolution, solve
from .estimation import EstimatedPmfs, EstimationLog, fit_estimates
from .goe import GoeParams, goe_evaluate
from .levels import SourceDistribution, UsefulnessLevels
from .policies import (EFFECT_AWARE, EffectAwarePolicy, PeriodicPolicy,
                       PolicySpec, make_policy)

MODEL_THETA = {"push": 10, "pull": 1, "push_and_pull": 5}

_CONFIG_FIELDS = {
    "m_horizon", "n_horizon", "p_erasure", "p_erasure_ack",
    "source_levels", "received_levels", "target_levels",
    "shape_a", "shape_b",
    "cost_tx", "cost_query", "cost_avail", "goe_target",
    "delta_max", "theta_max", "window_rule", "metric", "model_kind",
    "c_alpha_max", "c_beta_max", "discount", "eps_mu", "eps_pi",
    "sa_policy", "aa_policy", "seed",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    m_horizon: int = 100_000
    n_horizon: int = 400_000
    p_erasure: float = 0.2
    p_erasure_ack: float = 0.1
    source_levels: int = 10
    received_levels: int = 11
    target_levels: int = 11
    shape_a: float = 0.3
    shape_b: float = 0.3
    cost_tx: float = 0.1
    cost_query: float = 0.1
    cost_avail: float = 0.01
    goe_target: float = 0.6
    delta_max: int = 10
    theta_max: int | None = None  # None: derived from model_kind
    window_rule: str = "strict"
    metric: str = "goe_ratio"
    model_kind: str = "push_and_pull"
    c_alpha_max: float = 0.08
    c_beta_max: float = 0.08
    discount: float = 0.75
    eps_mu: float = 1e-4
    eps_pi: float = 1e-4
    sa_policy: PolicySpec = field(default_factory=lambda: PolicySpec(EFFECT_AWARE))
    aa_policy: PolicySpec = field(default_factory=lambda: PolicySpec(EFFECT_AWARE))
    seed: int = 0

    def __post_init__(self):
        if self.m_horizon < 1 or self.n_horizon < 1:
            raise ConfigError("horizons must be at least one slot")
        for p in (self.p_erasure, self.p_erasure_ack):
            if not 0.0 <= p <= 1.0:
                raise ConfigError("erasure probabilities must be in [0, 1]")
        if self.model_kind not in MODEL_THETA:
            raise ConfigError(f"unknown model kind {self.model_kind!r}")

    def goe_params(self) -> GoeParams:
        theta = self.theta_max if self.theta_max is not None \
            else MODEL_THETA[self.model_kind]
        return GoeParams(self.cost_tx, self.cost_query, self.cost_avail,
                         self.goe_target, self.delta_max, theta,
                         self.window_rule, self.metric)

    def to_json(self) -> str:
        doc = {k: getattr(self, k) for k in sorted(_CONFIG_FIELDS)
               if k not in ("sa_policy", "aa_policy")}
        doc["sa_policy"] = {"kind": self.sa_policy.kind, "rate": self.sa_policy.rate}
        doc["aa_policy"] = {"kind": self.aa_policy.kind, "rate": self.aa_policy.rate}
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SimConfig":
        doc = json.loads(text)
        unknown = set(doc) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        for key in ("sa_policy", "aa_policy"):
            if key in kwargs:
                spec = kwargs[key]
                extra = set(spec) - {"kind", "rate"}
                if extra:
                    raise ConfigError(f"unknown keys in {key}: {sorted(extra)}")
                kwargs[key] = PolicySpec(**spec)
        return SimConfig(**kwargs)


TRACE_COLUMNS = ("slot", "v", "alpha", "beta", "fwd_erased", "v_hat",
                 "delta", "theta", "goe", "effective", "ack_erased", "eack")


@dataclass
class PhaseStats:
    slots: int = 0
    tx: int = 0
    queries: int = 0
    physical: int = 0  # transmitted and not erased
    arrivals: int = 0  # physical and inside the action window
    effective: int = 0
    eacks: int = 0
    goe_sum: float = 0.0
    window_open: int = 0

    def rate(self, count: int) -> float:
        return count / self.slots if self.slots else 0.0

    @property
    def effectiveness(self) -> float:
        return self.rate(self.effective)


@dataclass
class Metrics:
    policy_pair: str
    seed: int
    axis_value: float | None
    e_phase: PhaseStats
    d_phase: PhaseStats
    warnings: tuple[str, ...] = ()

    @property
    def avg_effectiveness(self) -> float:
        return self.d_phase.effectiveness

    @property
    def avg_goe(self) -> float:
        return self.d_phase.goe_sum / self.d_phase.slots if self.d_phase.slots else 0.0

    @property
    def tx_rate(self) -> float:
        return self.d_phase.rate(self.d_phase.tx)

    @property
    def action_rate(self) -> float:
        return self.d_phase.rate(self.d_phase.arrivals)

    @property
    def query_rate(self) -> float:
        return self.d_phase.rate(self.d_phase.queries)

    def csv_row(self) -> list:
        return [self.policy_pair, self.axis_value, self.avg_effectiveness,
                self.avg_goe, self.tx_rate, self.action_rate, self.seed]


METRICS_HEADER = ["policy_pair", "axis_value", "avg_effectiveness", "avg_goe",
                  "tx_rate", "action_rate", "seed"]


def metrics_to_csv(rows: list[Metrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(METRICS_HEADER)
    for m in rows:
        w.writerow(m.csv_row())
    return buf.getvalue()


@dataclass
class RunResult:
    metrics: Metrics
    estimates: EstimatedPmfs | None
    sa_solution: PolicySolution | None
    aa_solution: PolicySolution | None
    trace: np.ndarray | None = None  # structured rows, TRACE_COLUMNS order

    def trace_csv(self) -> str:
        if self.trace is None:
            raise ValueError("run was executed without trace collection")
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(TRACE_COLUMNS)
        for row in self.trace:
            w.writerow([int(row["slot"]), float(row["v"]), int(row["alpha"]),
                        int(row["beta"]), int(row["fwd_erased"]),
                        float(row["v_hat"]), int(row["delta"]),
                        int(row["theta"]), float(row["goe"]),
                        int(row["effective"]), int(row["ack_erased"]),
                        int(row["eack"])])
        return buf.getvalue()


_TRACE_DTYPE = np.dtype([
    ("slot", np.int64), ("v", np.float64), ("alpha", np.int8),
    ("beta", np.int8), ("fwd_erased", np.int8), ("v_hat", np.float64),
    ("delta", np.int32), ("theta", np.int32), ("goe", np.float64),
    ("effective", np.int8), ("ack_erased", np.int8), ("eack", np.int8),
])


class _Stream:
    """Generator wrapper serving uniforms from prefetched blocks."""

    def __init__(self, gen: np.random.Generator, block: int = 1 << 15):
        self.gen = gen
        self.block = block
        self.buf = gen.random(block)
        self.pos = 0

    def random(self) -> float:
        if self.pos >= self.block:
            self.buf = self.gen.random(self.block)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


class Engine:
    """Mutable slot-state machine for one run."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.params = config.goe_params()
        self.src_levels = UsefulnessLevels.default_source(config.source_levels)
        self.rcv_levels = UsefulnessLevels.default_received(config.received_levels)
        self.tgt_levels = UsefulnessLevels.default_target(config.target_levels)
        self.source = SourceDistribution(self.src_levels, shape_a=config.shape_a,
                                         shape_b=config.shape_b)
        # a received in-window update carries its source importance verbatim
        try:
            self.rcv_of_src = [self.rcv_levels.index_of(v)
                               for v in self.src_levels.levels]
        except ValueError as exc:
            raise ConfigError("source levels must embed into the received "
                              f"levels: {exc}") from exc
        self.sa_space = SaStateSpace(len(self.src_levels))
        self.aa_space = AaStateSpace(len(self.rcv_levels), self.params.delta_max,
                                     self.params.theta_cap)
        seq = np.random.SeedSequence(config.seed)
        kids = seq.spawn(5)
        self.rng_source = np.random.Generator(np.random.PCG64(kids[0]))
        self.rng_sa = _Stream(np.random.Generator(np.random.PCG64(kids[1])))
        self.rng_aa = _Stream(np.random.Generator(np.random.PCG64(kids[2])))
        self.rng_fwd = _Stream(np.random.Generator(np.random.PCG64(kids[3])))
        self.rng_ack = _Stream(np.random.Generator(np.random.PCG64(kids[4])))
        self.reset_state()
        self.slot = 0

    def reset_state(self):
        self.mem_j = 0                      # received-usefulness memory index
        self.age0 = 0                       # 0-based slots since last arrival
        self.late0 = self.params.theta_cap  # 0-based slots since last query
        self.eack_prev = 0
        self.last_effective = 0

    def decision_state(self) -> tuple[int, int, int]:
        """Receiver state (usefulness idx, age, lateness) entering this slot."""
        d = min(self.age0 + 1, self.params.delta_max)
        t = min(self.late0 + 1, self.params.theta_cap)
        return self.mem_j, d, t

    def run_phase(self, slots: int, sa_policy, aa_policy, collect_log: bool,
                  collect_trace: bool, external_role: str | None = None,
                  external_actions=None) -> tuple[PhaseStats, EstimationLog | None,
                                                  np.ndarray | None]:
        """Advance ``slots`` slots; optionally source decisions externally."""
        params = self.params
        cfg = self.config
        src_vals = np.asarray(self.src_levels.levels)
        rcv_vals = np.asarray(self.rcv_levels.levels)
        delta_max, theta_cap = params.delta_max, params.theta_cap
        p_eps, p_ack = cfg.p_erasure, cfg.p_erasure_ack
        stats = PhaseStats()
        v_idx_arr = self.source.sample_indices(self.rng_source, slots)
        log_v = np.empty(slots) if collect_log else None
        log_vh = np.zeros(slots) if collect_log else None
        log_e = np.zeros(slots, dtype=np.int64) if collect_log else None
        trace = np.zeros(slots, dtype=_TRACE_DTYPE) if collect_trace else None
        sa_is_table = isinstance(sa_policy, EffectAwarePolicy)
        aa_is_table = isinstance(aa_policy, EffectAwarePolicy)

        for m in range(slots):
            self.slot += 1
            v_idx = int(v_idx_arr[m])
            v = src_vals[v_idx]
            # sender decision on (importance rank, last ack)
            if external_role == "sa":
                alpha = int(external_actions(v_idx, self.eack_prev))
            elif sa_is_table:
                alpha = sa_policy.decide_idx(v_idx * 2 + self.eack_prev,
                                             self.rng_sa)
            else:
                alpha = sa_policy.decide(None, self.rng_sa)
            # receiver decision on (memory, age, lateness)
            mem_j, d_dec, t_dec = self.decision_state()
            if external_role == "aa":
                beta = int(external_actions(mem_j, d_dec, t_dec))
            elif aa_is_table:
                beta = aa_policy.decide_idx(
                    (mem_j * delta_max + (d_dec - 1)) * theta_cap + (t_dec - 1),
                    self.rng_aa)
            else:
                beta = aa_policy.decide(None, self.rng_aa)

            late_now0 = 0 if beta else min(self.late0 + 1, theta_cap)
            theta = 1 if beta else t_dec  # graded lateness, 1-based floor
            window_ok = params.window_admits(theta)
            fwd_erased = 0
            if alpha:
                fwd_erased = 1 if self.rng_fwd.random() < p_eps else 0
            physical = alpha and not fwd_erased
            arrival = physical and window_ok
            if arrival:
                graded_v = v
                delta = 1
            else:
                graded_v = rcv_vals[mem_j]
                delta = d_dec
            goe = goe_evaluate(graded_v, delta, theta, alpha, beta, params)
            effective = 1 if (arrival and goe >= params.goe_target) else 0
            ack_erased = 0
            if effective:
                ack_erased = 1 if self.rng_ack.random() < p_ack else 0
            eack = 1 if (effective and not ack_erased) else 0

            stats.slots += 1
            stats.tx += alpha
            stats.queries += beta
            stats.physical += 1 if physical else 0
            stats.arrivals += 1 if arrival else 0
            stats.effective += effective
            stats.eacks += eack
            stats.goe_sum += goe
            stats.window_open += 1 if window_ok else 0

            if collect_log:
                log_v[m] = v
                log_vh[m] = v if arrival else 0.0
                log_e[m] = eack
            if collect_trace:
                trace[m] = (self.slot, v, alpha, beta, fwd_erased,
                            v if arrival else 0.0, delta, theta, goe,
                            effective, ack_erased, eack)

            # advance carried state
            if arrival:
                self.mem_j = self.rcv_of_src[v_idx]
                self.age0 = 0
            else:
                self.age0 = min(self.age0 + 1, delta_max)
            self.late0 = late_now0
            self.eack_prev = eack
            self.last_effective = effective

        log = EstimationLog(log_v, log_vh, log_e) if collect_log else None
        return stats, log, trace


def _probe_policies(config: SimConfig):
    """Probing-phase policies: max-rate sender, schedule-driven receiver."""
    params = config.goe_params()
    sa_rate = min(1.0, config.c_alpha_max / params.cost_tx) \
        if params.cost_tx > 0 else 1.0
    sa = PeriodicPolicy(sa_rate)
    spec = config.aa_policy
    if spec.effect_aware:
        aa = PeriodicPolicy(spec.rate)  # bootstrap until the model is solved
    else:
        aa = make_policy(spec)
    return sa, aa


def fit_from_engine(engine: Engine, log: EstimationLog,
                    window_open_slots: int) -> EstimatedPmfs:
    return fit_estimates(log, engine.src_levels, engine.rcv_levels,
                         engine.tgt_levels, window_open_slots)


def solve_sa(engine: Engine, estimates: EstimatedPmfs) -> PolicySolution:
    cfg = engine.config
    model = build_sa_model(engine.source, estimates.target_pmf,
                           engine.tgt_levels, engine.params,
                           cfg.c_alpha_max, cfg.discount)
    return solve(model, cfg.eps_mu, cfg.eps_pi)


def solve_aa(engine: Engine, estimates: EstimatedPmfs) -> PolicySolution:
    cfg = engine.config
    model = build_aa_decision_model(estimates.q, engine.rcv_levels,
                                    estimates.push_success, engine.params,
                                    cfg.c_beta_max, cfg.discount)
    return solve(model, cfg.eps_mu, cfg.eps_pi)


def run(config: SimConfig, collect_trace: bool = False) -> RunResult:
    """Probing phase, estimation, solves, then the decision phase."""
    engine = Engine(config)
    sa_probe, aa_probe = _probe_policies(config)
    e_stats, log, e_trace = engine.run_phase(
        config.m_horizon, sa_probe, aa_probe,
        collect_log=True, collect_trace=collect_trace)
    estimates = fit_from_engine(engine, log, e_stats.window_open)

    warnings = list(estimates.warnings)
    sa_solution = aa_solution = None
    if config.sa_policy.effect_aware:
        sa_solution = solve_sa(engine, estimates)
    if config.aa_policy.effect_aware:
        aa_solution = solve_aa(engine, estimates)

    sa_policy = make_policy(config.sa_policy, sa_solution,
                            encoder=lambda st: st[0] * 2 + st[1]) \
        if config.sa_policy.effect_aware else make_policy(config.sa_policy)
    if config.aa_policy.effect_aware:
        space = engine.aa_space
        aa_policy = make_policy(
            config.aa_policy, aa_solution,
            encoder=lambda st: (st[0] * space.delta_max + st[1] - 1)
            * space.theta_cap + st[2] - 1)
    else:
        aa_policy = aa_probe  # schedule cursors carry across the phase cut

    d_stats, _, d_trace = engine.run_phase(
        config.n_horizon, sa_policy, aa_policy,
        collect_log=False, collect_trace=collect_trace)

    label = f"({config.sa_policy.kind},{config.aa_policy.kind})"
    metrics = Metrics(label, config.seed, None, e_stats, d_stats,
                      tuple(warnings))
    trace = None
    if collect_trace:
        trace = np.concatenate([e_trace, d_trace])
    return RunResult(metrics, estimates, sa_solution, aa_solution, trace)


SWEEP_AXES = ("theta_max", "goe_target", "c_max", "tx_rate", "query_rate",
              "e_horizon")


def apply_axis(base: SimConfig, axis: str, value) -> SimConfig:
    if axis == "theta_max":
        return replace(base, theta_max=int(value))
    if axis == "goe_target":
        return replace(base, goe_target=float(value))
    if axis == "c_max":
        return replace(base, c_alpha_max=float(value), c_beta_max=float(value))
    if axis == "tx_rate":
        return replace(base, sa_policy=replace(base.sa_policy, rate=float(value)))
    if axis == "query_rate":
        return replace(base, aa_policy=replace(base.aa_policy, rate=float(value)))
    if axis == "e_horizon":
        return replace(base, m_horizon=int(value))
    raise ConfigError(f"unknown sweep axis {axis!r}; one of {SWEEP_AXES}")


def sweep(base: SimConfig, axis: str, values: list) -> list[Metrics]:
    """One independent run (fresh estimation and solve) per axis value."""
    rows: list[Metrics] = []
    for value in values:
        cfg = apply_axis(base, axis, value)
        try:
            result = run(cfg)
            m = result.metrics
            m.axis_value = float(value)
        except Exception as exc:  # annotate and keep sweeping
            empty = PhaseStats()
            m = Metrics(f"({base.sa_policy.kind},{base.aa_policy.kind})",
                        base.seed, float(value), empty, empty,
                        (f"run failed: {exc}",))
        rows.append(m)
    return rows


POLICY_PAIRS = (
    (EFFECT_AWARE, EFFECT_AWARE),
    ("markovian", EFFECT_AWARE),
    (EFFECT_AWARE, "markovian"),
    ("markovian", "markovian"),
    ("periodic", EFFECT_AWARE),
    (EFFECT_AWARE, "periodic"),
    ("periodic", "periodic"),
)


def run_policy_pairs(base: SimConfig, seeds: list[int],
                     pairs=POLICY_PAIRS) -> list[RunResult]:
    """The classic seven-pair comparison, one run per (pair, seed)."""
    out: list[RunResult] = []
    for sa_kind, aa_kind in pairs:
        for seed in seeds:
            cfg = replace(
                base, seed=seed,
                sa_policy=replace(base.sa_policy, kind=sa_kind),
                aa_policy=replace(base.aa_policy, kind=aa_kind))
            out.append(run(cfg))
    return out
