"""Empirical pmf estimation from probing-phase logs.

Plain counting estimators: the received-usefulness pmf at the receiver, the
ack-arrival probability and ack-conditional importance pmfs at the sender,
and the mapped target-usefulness pmf combining both ack branches.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .levels import LEVEL_TOL, UsefulnessLevels


class EmptyLogError(ValueError):
    pass


class ConditioningError(ValueError):
    """Conditioning event never occurs in the log."""


@dataclass(frozen=True)
class EstimationLog:
    """Per-slot probing records: source level, received level (0 = none), ack bit."""

    v: np.ndarray
    v_hat: np.ndarray
    eack: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        vh = np.asarray(self.v_hat, dtype=float)
        e = np.asarray(self.eack, dtype=np.int64)
        if not (v.shape == vh.shape == e.shape) or v.ndim != 1:
            raise ValueError("log columns must be equal-length vectors")
        if v.size == 0:
            raise EmptyLogError("empty estimation log")
        if not np.isin(e, (0, 1)).all():
            raise ValueError("eack entries must be bits")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "v_hat", vh)
        object.__setattr__(self, "eack", e)

    def __len__(self) -> int:
        return self.v.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["slot", "v", "v_hat", "eack"])
        for m in range(len(self)):
            w.writerow([m + 1, repr(float(self.v[m])),
                        repr(float(self.v_hat[m])), int(self.eack[m])])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "EstimationLog":
        rows = list(csv.DictReader(io.StringIO(text)))
        return EstimationLog(
            v=np.array([float(r["v"]) for r in rows]),
            v_hat=np.array([float(r["v_hat"]) for r in rows]),
            eack=np.array([int(r["eack"]) for r in rows]),
        )


def _level_counts(values: np.ndarray, levels: UsefulnessLevels) -> np.ndarray:
    grid = np.asarray(levels.levels)
    counts = np.zeros(len(grid))
    for k, lv in enumerate(grid):
        counts[k] = np.count_nonzero(np.abs(values - lv) <= LEVEL_TOL)
    return counts


def estimate_received_pmf(log: EstimationLog, levels: UsefulnessLevels) -> np.ndarray:
    """Empirical per-slot distribution of the received usefulness."""
    counts = _level_counts(log.v_hat, levels)
    return counts / len(log)


def estimate_eack_prob(log: EstimationLog) -> np.ndarray:
    """[P(ack=0), P(ack=1)] by counting."""
    p1 = float(log.eack.mean())
    return np.array([1.0 - p1, p1])


def estimate_conditional_importance(log: EstimationLog, levels: UsefulnessLevels,
                                    e: int) -> np.ndarray:
    """Importance pmf conditioned on the ack outcome ``e``."""
    mask = log.eack == e
    if not mask.any():
        raise ConditioningError(f"ack outcome {e} never observed")
    joint = _level_counts(log.v[mask], levels) / len(log)
    return joint / (mask.sum() / len(log))


def target_branch_numerators(cond_pmf: np.ndarray, source_levels: UsefulnessLevels,
                             target_levels: UsefulnessLevels, e: int) -> np.ndarray:
    """Unnormalized per-target-level scores for one ack branch.

    The ack=1 branch scores a target level by the conditional importance mass
    at or above it (successes say the target was not higher than what got
    through); the ack=0 branch uses the mass strictly below it.
    """
    src = np.asarray(source_levels.levels)
    out = np.zeros(len(target_levels))
    for j, th in enumerate(target_levels.levels):
        if e == 1:
            sel = src >= th - LEVEL_TOL
        else:
            sel = src < th - LEVEL_TOL
        out[j] = cond_pmf[sel].sum()
    return out


def estimate_target_pmf(log: EstimationLog, source_levels: UsefulnessLevels,
                        target_levels: UsefulnessLevels) -> np.ndarray:
    """Believed distribution of the target usefulness from ack statistics.

    Each ack branch contributes its normalized score vector weighted by the
    branch probability; a branch that never occurs (or scores zero
    everywhere) simply contributes nothing.
    """
    pr_e = estimate_eack_prob(log)
    combined = np.zeros(len(target_levels))
    contributed = False
    for e in (0, 1):
        if pr_e[e] == 0.0:
            continue
        cond = estimate_conditional_importance(log, source_levels, e)
        nums = target_branch_numerators(cond, source_levels, target_levels, e)
        z = nums.sum()
        if z <= 0.0:
            continue
        combined += pr_e[e] * nums / z
        contributed = True
    if not contributed:
        raise ConditioningError("both ack branches are degenerate")
    return combined / combined.sum()


@dataclass(frozen=True)
class EstimatedPmfs:
    """Bundle of fitted distributions handed to the model builders."""

    q: np.ndarray             # received usefulness, incl. the zero level
    pr_eack: np.ndarray       # [P(0), P(1)]
    target_pmf: np.ndarray    # over the target level grid
    push_success: float       # P(update crosses | window open)
    warnings: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps({
            "format": "estimated-pmfs",
            "version": 1,
            "q": self.q.tolist(),
            "pr_eack": self.pr_eack.tolist(),
            "target_pmf": self.target_pmf.tolist(),
            "push_success": self.push_success,
            "warnings": list(self.warnings),
        })


def fit_estimates(log: EstimationLog, source_levels: UsefulnessLevels,
                  received_levels: UsefulnessLevels,
                  target_levels: UsefulnessLevels,
                  window_open_slots: int | None = None) -> EstimatedPmfs:
    """Fit every distribution the agents need, tolerating degenerate logs."""
    warnings: list[str] = []
    q = estimate_received_pmf(log, received_levels)
    pr_e = estimate_eack_prob(log)
    try:
        target = estimate_target_pmf(log, source_levels, target_levels)
    except ConditioningError as exc:
        warnings.append(f"target pmf fallback (uniform): {exc}")
        target = np.full(len(target_levels), 1.0 / len(target_levels))
    open_slots = len(log) if window_open_slots is None else window_open_slots
    if open_slots > 0:
        push = float(np.count_nonzero(log.v_hat > LEVEL_TOL)) / open_slots
    else:
        push = 0.0
        warnings.append("no open-window slots observed; push success set to 0")
    return EstimatedPmfs(q, pr_e, target, min(push, 1.0), tuple(warnings))
