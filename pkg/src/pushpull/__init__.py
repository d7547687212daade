"""Simulator and policy-optimization toolkit for goal-oriented status updates."""

__version__ = "0.1.0"

from .goe import GoeParams, effectiveness_indicator, goe_evaluate, target_usefulness
from .levels import (ErasureChannel, SourceDistribution, UsefulnessLevels,
                     beta_binomial_pmf)
from .cmdp import (CmdpModel, PolicySolution, check_reachability, policy_cost,
                   solve, span, value_iterate)
from .agents import (AaState, AaStateSpace, SaState, SaStateSpace,
                     build_aa_decision_model, build_aa_model, build_sa_model,
                     validate_truncation)
from .estimation import (EstimatedPmfs, EstimationLog,
                         estimate_conditional_importance, estimate_eack_prob,
                         estimate_received_pmf, estimate_target_pmf,
                         fit_estimates)
from .policies import (DecisionPolicy, PolicySpec, extract_thresholds,
                       lookup_map_json, make_policy, markov_rate_to_p11)
from .simulator import Metrics, RunResult, SimConfig, run, run_policy_pairs, sweep

__all__ = [
    "GoeParams", "effectiveness_indicator", "goe_evaluate", "target_usefulness",
    "ErasureChannel", "SourceDistribution", "UsefulnessLevels", "beta_binomial_pmf",
    "CmdpModel", "PolicySolution", "check_reachability", "policy_cost", "solve",
    "span", "value_iterate",
    "AaState", "AaStateSpace", "SaState", "SaStateSpace",
    "build_aa_decision_model", "build_aa_model", "build_sa_model",
    "validate_truncation",
    "EstimatedPmfs", "EstimationLog", "estimate_conditional_importance",
    "estimate_eack_prob", "estimate_received_pmf", "estimate_target_pmf",
    "fit_estimates",
    "DecisionPolicy", "PolicySpec", "extract_thresholds", "lookup_map_json",
    "make_policy", "markov_rate_to_p11",
    "Metrics", "RunResult", "SimConfig", "run", "run_policy_pairs", "sweep",
]
