"""Discrete usefulness levels and the source importance distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LEVEL_TOL = 1e-9


def even_levels(count: int, include_zero: bool) -> tuple[float, ...]:
    """Evenly spaced levels on [0, 1], ascending.

    With ``include_zero`` the grid is 0, 1/(count-1), ..., 1; otherwise it is
    1/count, 2/count, ..., 1 (zero excluded).
    """
    if count < 1:
        raise ValueError("need at least one level")
    if include_zero:
        if count == 1:
            return (0.0,)
        return tuple(j / (count - 1) for j in range(count))
    return tuple(i / count for i in range(1, count + 1))


@dataclass(frozen=True)
class UsefulnessLevels:
    """An ordered grid of usefulness values in [0, 1].

    ``kind`` is one of ``source`` (importance ranks at the sensing side),
    ``received`` (endpoint-side usefulness, first level must be 0), or
    ``target`` (candidate target-usefulness levels).
    """

    levels: tuple[float, ...]
    kind: str = "source"

    def __post_init__(self):
        if self.kind not in ("source", "received", "target"):
            raise ValueError(f"unknown level kind {self.kind!r}")
        lv = tuple(float(x) for x in self.levels)
        if not lv:
            raise ValueError("empty level set")
        if any(x < -LEVEL_TOL or x > 1 + LEVEL_TOL for x in lv):
            raise ValueError("levels must lie in [0, 1]")
        if any(b - a <= LEVEL_TOL for a, b in zip(lv, lv[1:])):
            raise ValueError("levels must be strictly ascending")
        if self.kind == "received" and abs(lv[0]) > LEVEL_TOL:
            raise ValueError("received levels must start at 0")
        object.__setattr__(self, "levels", lv)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, i: int) -> float:
        return self.levels[i]

    def index_of(self, value: float) -> int:
        """Index of the level equal to ``value`` (within tolerance)."""
        arr = np.asarray(self.levels)
        i = int(np.argmin(np.abs(arr - value)))
        if abs(arr[i] - value) > 1e-6:
            raise ValueError(f"{value} is not a level of this set")
        return i

    def cdf_at(self, x: float) -> np.ndarray:
        """Indicator vector: which levels are <= x (tolerance-padded)."""
        return np.asarray(self.levels) <= x + LEVEL_TOL

    @staticmethod
    def default_source(count: int = 10) -> "UsefulnessLevels":
        return UsefulnessLevels(even_levels(count, include_zero=False), "source")

    @staticmethod
    def default_received(count: int = 11) -> "UsefulnessLevels":
        return UsefulnessLevels(even_levels(count, include_zero=True), "received")

    @staticmethod
    def default_target(count: int = 11) -> "UsefulnessLevels":
        return UsefulnessLevels(even_levels(count, include_zero=True), "target")


def beta_binomial_pmf(levels_count: int, a: float, b: float) -> np.ndarray:
    """Beta-binomial pmf over ``levels_count`` ordered outcomes.

    Outcome i (1-based) has probability
    C(n-1, i-1) * B(i-1+a, n-i+b) / B(a, b) with n = levels_count.
    Computed with log-gamma so large level counts stay stable.
    """
    if levels_count < 1:
        raise ValueError("levels_count must be >= 1")
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    n = levels_count - 1  # number of trials
    k = np.arange(levels_count, dtype=float)
    log_choose = (
        math.lgamma(n + 1)
        - np.vectorize(math.lgamma)(k + 1)
        - np.vectorize(math.lgamma)(n - k + 1)
    )
    log_beta_num = (
        np.vectorize(math.lgamma)(k + a)
        + np.vectorize(math.lgamma)(n - k + b)
        - math.lgamma(n + a + b)
    )
    log_beta_den = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    p = np.exp(log_choose + log_beta_num - log_beta_den)
    return p / p.sum()  # renormalize away the last ulps


@dataclass(frozen=True)
class SourceDistribution:
    """i.i.d. per-slot importance of source observations."""

    levels: UsefulnessLevels
    pmf: np.ndarray = field(default=None)  # type: ignore[assignment]
    shape_a: float = 0.3
    shape_b: float = 0.3

    def __post_init__(self):
        if self.pmf is None:
            pmf = beta_binomial_pmf(len(self.levels), self.shape_a, self.shape_b)
        else:
            pmf = np.asarray(self.pmf, dtype=float)
        if pmf.shape != (len(self.levels),):
            raise ValueError("pmf length must match the level count")
        if (pmf < 0).any() or abs(pmf.sum() - 1.0) > 1e-12:
            raise ValueError("pmf must be non-negative and sum to 1")
        object.__setattr__(self, "pmf", pmf)

    def sample_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. level indices."""
        cum = np.cumsum(self.pmf)
        u = rng.random(size)
        return np.searchsorted(cum, u, side="right").clip(0, len(self.levels) - 1)


@dataclass(frozen=True)
class ErasureChannel:
    """Per-use Bernoulli packet erasure."""

    erasure_prob: float
    rng_stream: str = "channel"

    def __post_init__(self):
        if not 0.0 <= self.erasure_prob <= 1.0:
            raise ValueError("erasure probability must be in [0, 1]")

    def erased(self, rng: np.random.Generator) -> bool:
        return rng.random() < self.erasure_prob
