"""Rank-based two-sample location statistics and their critical values.

The rank statistic is the quadratic form ``delta' pinv(Sigma) delta`` where
delta is the recentered sample-1 mean of the scored rank vectors and Sigma
its exact covariance under uniformly random assignment of n1 of the n grid
scores to sample 1 (simple random sampling without replacement).  Because
the score multiset is grid-determined, the null distribution of the
statistic does not depend on the data law, and critical values can be
tabulated once per (grid, score, n1) by Monte Carlo over label permutations.

Hotelling's T^2 on the raw observations, calibrated with the asymptotic
chi-square critical value, is included as the pseudo-Gaussian baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import DOMAIN_LABELS, substream
from .grids import Grid, ReferenceKind, build_grid
from .scores import ScoreKind, grid_scores, scored_sample, ScoredSample
from .transport import as_data_matrix, empirical_map

__all__ = [
    "TwoSampleConfig",
    "CriticalValueTable",
    "TestResult",
    "delta_statistic",
    "exact_null_covariance",
    "rank_statistic",
    "hotelling",
    "mc_critical_value",
    "two_sample_test",
]

_PINV_RCOND = 1e-10


@dataclass(frozen=True)
class TwoSampleConfig:
    """Configuration of one distribution-free two-sample test."""

    n1: int
    n2: int
    grid_kind: ReferenceKind
    score_kind: ScoreKind
    alpha: float = 0.05
    mc_reps: int = 40000
    seed: int = 0

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("both sample sizes must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.mc_reps < 1000:
            raise ValueError(f"need at least 1000 Monte-Carlo replications, got {self.mc_reps}")
        object.__setattr__(self, "grid_kind", ReferenceKind(self.grid_kind))
        object.__setattr__(self, "score_kind", ScoreKind(self.score_kind))

    @property
    def n(self) -> int:
        return self.n1 + self.n2


@dataclass(frozen=True, eq=False)
class CriticalValueTable:
    """Monte-Carlo null distribution summary for one test configuration.

    `key` is (dim, n, n1, grid identity, score kind, reps, seed); the stored
    null sample is sorted, and `critical_value` is its order statistic at
    index ceil((1 - alpha) (B + 1)), clamped to B.
    """

    key: tuple
    alpha: float
    critical_value: float
    null_sample: np.ndarray

    def p_value(self, statistic: float) -> float:
        """Add-one Monte-Carlo p-value (#{null >= observed} + 1)/(B + 1)."""
        b = len(self.null_sample)
        count = b - int(np.searchsorted(self.null_sample, statistic, side="left"))
        return (count + 1) / (b + 1)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_value: float
    reject: bool
    p_value: float


def delta_statistic(scored: ScoredSample, n1: int) -> np.ndarray:
    """Recentered sample-1 mean of the scored rank vectors.

    Equals the mean over the first n1 values minus the mean over all n; up to
    the data-independent factor n2/n this is the difference of the two
    samples' score means.
    """
    values = scored.values
    n = values.shape[0]
    if not 1 <= n1 < n:
        raise ValueError(f"n1 must be in [1, {n - 1}], got {n1}")
    return values[:n1].mean(axis=0) - values.mean(axis=0)


def exact_null_covariance(grid_score_values: np.ndarray, n1: int) -> np.ndarray:
    """Exact covariance of the recentered mean under random labelling.

    For a simple random sample of n1 of the n fixed score vectors,
    Cov = ((n - n1)/(n n1)) * (1/(n-1)) sum_i (v_i - vbar)(v_i - vbar)'.
    """
    values = np.asarray(grid_score_values, dtype=float)
    n = values.shape[0]
    if not 1 <= n1 <= n - 1:
        raise ValueError(f"n1 must be in [1, {n - 1}], got {n1}")
    centered = values - values.mean(axis=0)
    pop = centered.T @ centered / (n - 1)
    return ((n - n1) / (n * n1)) * pop


def _quadratic_form(delta: np.ndarray, sigma: np.ndarray) -> float:
    if not sigma.any():
        return 0.0
    pinv = np.linalg.pinv(sigma, rcond=_PINV_RCOND, hermitian=True)
    return max(float(delta @ pinv @ delta), 0.0)


def rank_statistic(scored: ScoredSample, n1: int) -> float:
    """Quadratic rank statistic delta' pinv(Sigma_delta) delta."""
    delta = delta_statistic(scored, n1)
    sigma = exact_null_covariance(scored.values, n1)
    return _quadratic_form(delta, sigma)


def hotelling(data1, data2) -> float:
    """Two-sample Hotelling T^2 with bias-corrected pooled covariance."""
    data1 = as_data_matrix(data1)
    data2 = as_data_matrix(data2, data1.shape[1])
    n1, d = data1.shape
    n2 = data2.shape[0]
    if n1 < d + 1 or n2 < d + 1:
        raise ValueError(f"each sample needs at least {d + 1} observations")
    delta = data1.mean(axis=0) - data2.mean(axis=0)
    pooled = ((n1 - 1) * np.cov(data1, rowvar=False) + (n2 - 1) * np.cov(data2, rowvar=False)) / (
        n1 + n2 - 2
    )
    sigma = (1.0 / n1 + 1.0 / n2) * np.atleast_2d(pooled)
    return _quadratic_form(delta, sigma)


def _critical_index(alpha: float, b: int) -> int:
    """1-based order-statistic index ceil((1 - alpha)(B + 1)), clamped to B."""
    return min(math.ceil((1.0 - alpha) * (b + 1)), b)


def mc_critical_value(
    grid: Grid,
    score: ScoreKind,
    n1: int,
    alpha: float = 0.05,
    reps: int = 40000,
    seed: int = 0,
) -> CriticalValueTable:
    """Distribution-free critical value by Monte Carlo over label permutations.

    Draws `reps` uniformly random subsets of size n1 from the grid-score
    multiset (one counter-based stream per replication, so results are
    independent of evaluation order), computes the rank statistic for each,
    and returns the (1 - alpha) empirical quantile together with the sorted
    null sample.  No data enters: the tabulation is valid for every
    absolutely continuous data law.
    """
    if reps < 1000:
        raise ValueError(f"need at least 1000 replications, got {reps}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    values = grid_scores(grid, score)
    n = grid.n
    if not 1 <= n1 < n:
        raise ValueError(f"n1 must be in [1, {n - 1}], got {n1}")
    sigma = exact_null_covariance(values, n1)
    degenerate = not sigma.any()
    pinv = None if degenerate else np.linalg.pinv(sigma, rcond=_PINV_RCOND, hermitian=True)
    mean_all = values.mean(axis=0)
    null = np.zeros(reps)
    if not degenerate:
        for rep in range(reps):
            rng = substream(seed, DOMAIN_LABELS, 0, rep)
            idx = rng.permutation(n)[:n1]
            delta = values[idx].mean(axis=0) - mean_all
            null[rep] = max(float(delta @ pinv @ delta), 0.0)
    null.sort()
    critical = float(null[_critical_index(alpha, reps) - 1])
    _, kind_value, _, fact = grid.identity()
    key = (grid.dim, n, n1, kind_value, fact, ScoreKind(score).value, reps, seed)
    return CriticalValueTable(key, alpha, critical, null)


def two_sample_test(
    data1,
    data2,
    cfg: TwoSampleConfig,
    grid: Grid | None = None,
    table: CriticalValueTable | None = None,
) -> TestResult:
    """Full distribution-free pipeline on a pooled two-sample dataset.

    Pools the samples (sample 1 first), computes the empirical rank map, the
    scored sample, and the rank statistic, and compares it against the
    Monte-Carlo critical value.  Pass a prebuilt `grid` and/or cached `table`
    to skip recomputation; otherwise both are computed from the config.
    """
    data1 = as_data_matrix(data1)
    data2 = as_data_matrix(data2, data1.shape[1])
    if data1.shape[0] != cfg.n1 or data2.shape[0] != cfg.n2:
        raise ValueError(
            f"sample sizes ({data1.shape[0]}, {data2.shape[0]}) do not match "
            f"config ({cfg.n1}, {cfg.n2})"
        )
    dim = data1.shape[1]
    if grid is None:
        grid = build_grid(dim, cfg.n, cfg.grid_kind)
    if grid.kind is not cfg.grid_kind:
        raise ValueError(f"grid kind {grid.kind.value} does not match config {cfg.grid_kind.value}")
    if grid.n != cfg.n or grid.dim != dim:
        raise ValueError(f"grid is ({grid.n}, dim {grid.dim}), expected ({cfg.n}, dim {dim})")
    if table is None:
        table = mc_critical_value(grid, cfg.score_kind, cfg.n1, cfg.alpha, cfg.mc_reps, cfg.seed)
    pooled = np.vstack([data1, data2])
    scored = scored_sample(empirical_map(pooled, grid), cfg.score_kind)
    statistic = rank_statistic(scored, cfg.n1)
    return TestResult(
        statistic=statistic,
        critical_value=table.critical_value,
        reject=bool(statistic > table.critical_value),
        p_value=table.p_value(statistic),
    )
