"""Two-sample shift scenarios and rejection-frequency power curves.

Scenarios cover spherical and correlated Gaussians, heavy-tailed spherical
Student laws, products of independent Cauchy marginals, and a bimodal
"banana" Gaussian mixture.  A power curve draws, for each shift eta and each
replication, sample 1 from the centered law and sample 2 from the same law
shifted by eta in every coordinate, runs every configured test on the same
pooled data (paired comparison across tests), and records rejection
frequencies.

All draws flow through counter-based streams keyed by (seed, shift index,
replication), and normal/chi-square variates come from inverse-CDF
transforms of uniforms, so curves are bit-reproducible regardless of
evaluation order or platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special as _sps

from ._rng import DOMAIN_DATA, open_uniform, substream
from .grids import Grid, ReferenceKind, build_grid
from .scores import ScoreKind, scored_sample
from .special import inv_cdf_chisq, inv_cdf_normal
from .transport import empirical_map
from .two_sample import hotelling, mc_critical_value, rank_statistic

__all__ = ["ScenarioKind", "Scenario", "PowerCurve", "TEST_GRIDS",
           "HOTELLING_ID", "sample_scenario", "power_curve"]


class ScenarioKind(str, Enum):
    GAUSS_SPHERICAL = "gauss-spherical"
    GAUSS_CORRELATED = "gauss-correlated"
    STUDENT_SPHERICAL = "student-spherical"
    CAUCHY_INDEPENDENT = "cauchy-independent"
    CAUCHY_SPHERICAL = "cauchy-spherical"
    BANANA = "banana"


_BANANA_WEIGHTS = np.array([0.3, 0.35, 0.35])
_BANANA_MEANS = np.array([[0.0, -0.7], [-0.9, 0.3], [0.9, 0.3]])
_BANANA_COVS = np.array(
    [
        [[0.35**2, 0.0], [0.0, 0.35**2]],
        [[0.358, -0.55], [-0.55, 1.02]],
        [[0.358, 0.55], [0.55, 1.02]],
    ]
)
_BANANA_CHOLS = np.linalg.cholesky(_BANANA_COVS)


def _default_sigma(dim: int) -> np.ndarray:
    if dim == 2:
        return np.array([[1.0, 0.8], [0.8, 1.0]])
    return np.full((dim, dim), 0.5) + 0.5 * np.eye(dim)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A sampling law for the power study, shifted by eta * (1, ..., 1)."""

    kind: ScenarioKind
    dim: int
    df: float | None = None
    sigma: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.kind is ScenarioKind.BANANA:
            if self.dim != 2:
                raise ValueError("the banana mixture is bivariate only")
            for cov in _BANANA_COVS:
                if np.linalg.det(cov) <= 0:
                    raise ValueError("banana component covariance not positive definite")
        if self.kind is ScenarioKind.STUDENT_SPHERICAL:
            if self.df is None or self.df <= 0:
                raise ValueError("spherical Student scenarios need df > 0")
        elif self.df is not None:
            raise ValueError(f"{self.kind.value} takes no df parameter")
        if self.kind is ScenarioKind.GAUSS_CORRELATED:
            sigma = self.sigma if self.sigma is not None else _default_sigma(self.dim)
            sigma = np.asarray(sigma, dtype=float)
            if sigma.shape != (self.dim, self.dim) or not np.allclose(sigma, sigma.T):
                raise ValueError("sigma must be a symmetric (dim, dim) matrix")
            try:
                np.linalg.cholesky(sigma)
            except np.linalg.LinAlgError:
                raise ValueError("sigma must be positive definite") from None
            sigma.flags.writeable = False
            object.__setattr__(self, "sigma", sigma)
        elif self.sigma is not None:
            raise ValueError(f"{self.kind.value} takes no sigma parameter")

    def label(self) -> str:
        parts = [self.kind.value, f"d{self.dim}"]
        if self.df is not None:
            parts.append(f"df{self.df:g}")
        return "-".join(parts)


def _std_normal(rng, shape) -> np.ndarray:
    return inv_cdf_normal(open_uniform(rng, shape))


def _chisq_real_df(u: np.ndarray, df: float) -> np.ndarray:
    # inv_cdf_chisq is integer-df only; Student scenarios need fractional df.
    return 2.0 * _sps.gammaincinv(df / 2.0, u)


def sample_scenario(scenario: Scenario, count: int, shift: float, rng) -> np.ndarray:
    """Draw `count` i.i.d. observations, shifted by `shift` in every coordinate."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if shift < 0:
        raise ValueError(f"shift must be >= 0, got {shift}")
    d = scenario.dim
    kind = scenario.kind
    if kind is ScenarioKind.GAUSS_SPHERICAL:
        out = _std_normal(rng, (count, d))
    elif kind is ScenarioKind.GAUSS_CORRELATED:
        chol = np.linalg.cholesky(scenario.sigma)
        out = _std_normal(rng, (count, d)) @ chol.T
    elif kind in (ScenarioKind.STUDENT_SPHERICAL, ScenarioKind.CAUCHY_SPHERICAL):
        df = scenario.df if kind is ScenarioKind.STUDENT_SPHERICAL else 1.0
        gauss = _std_normal(rng, (count, d))
        chisq = _chisq_real_df(open_uniform(rng, count), df)
        out = gauss / np.sqrt(chisq / df)[:, None]
    elif kind is ScenarioKind.CAUCHY_INDEPENDENT:
        out = np.tan(np.pi * (open_uniform(rng, (count, d)) - 0.5))
    else:
        component = np.searchsorted(np.cumsum(_BANANA_WEIGHTS), open_uniform(rng, count))
        gauss = _std_normal(rng, (count, 2))
        out = _BANANA_MEANS[component] + np.einsum(
            "nij,nj->ni", _BANANA_CHOLS[component], gauss
        )
    return out + shift


# Test identifiers and the (grid kind, score kind) pair realizing each rank
# statistic; Hotelling runs on the raw data.
TEST_GRIDS: dict[str, tuple[ReferenceKind, ScoreKind]] = {
    "wilcoxon-spherical": (ReferenceKind.SPHERICAL_UNIFORM, ScoreKind.WILCOXON),
    "wilcoxon-cubic": (ReferenceKind.CUBIC_UNIFORM, ScoreKind.WILCOXON),
    "vdw-spherical": (ReferenceKind.SPHERICAL_UNIFORM, ScoreKind.VDW_SPHERICAL),
    "vdw-cubic": (ReferenceKind.CUBIC_UNIFORM, ScoreKind.VDW_MARGINAL),
    "vdw-gauss-spherical": (ReferenceKind.GAUSSIAN_SPHERICAL, ScoreKind.WILCOXON),
    "vdw-gauss-cubic": (ReferenceKind.GAUSSIAN_CUBIC, ScoreKind.WILCOXON),
}
HOTELLING_ID = "hotelling"


@dataclass(frozen=True)
class PowerCurve:
    """Rejection frequency per (test, shift): the payload of a power figure."""

    scenario: Scenario
    n: int
    n1: int
    tests: tuple[str, ...]
    shifts: tuple[float, ...]
    rates: dict[tuple[str, float], float]
    reps: int
    seed: int
    alpha: float = 0.05


def power_curve(
    scenario: Scenario,
    n: int,
    tests: list[str],
    shifts: list[float],
    reps: int = 500,
    seed: int = 0,
    alpha: float = 0.05,
    mc_reps: int = 40000,
    grids: dict[ReferenceKind, Grid] | None = None,
    progress=None,
) -> PowerCurve:
    """Estimate rejection frequencies on a grid of shifts.

    Within one replication every test sees the same pooled data (sample 1 at
    shift 0, sample 2 at the configured shift).  Reference grids and
    Monte-Carlo critical values are set up once per curve; pass precomputed
    `grids` to share factorization searches across curves.
    """
    if n % 2:
        raise ValueError(f"total sample size must be even, got {n}")
    unknown = [t for t in tests if t != HOTELLING_ID and t not in TEST_GRIDS]
    if unknown:
        raise ValueError(f"unknown test identifiers: {unknown}")
    n1 = n // 2
    rank_tests = [t for t in tests if t != HOTELLING_ID]

    grids = dict(grids or {})
    for test in rank_tests:
        kind, _ = TEST_GRIDS[test]
        if kind not in grids:
            grids[kind] = build_grid(scenario.dim, n, kind)
    tables = {
        test: mc_critical_value(
            grids[TEST_GRIDS[test][0]], TEST_GRIDS[test][1], n1, alpha, mc_reps, seed
        )
        for test in rank_tests
    }
    hotelling_critical = inv_cdf_chisq(1.0 - alpha, scenario.dim) if HOTELLING_ID in tests else None

    rejections = {test: np.zeros(len(shifts), dtype=int) for test in tests}
    needed_kinds = {TEST_GRIDS[t][0] for t in rank_tests}
    for eta_idx, eta in enumerate(shifts):
        for rep in range(reps):
            rng = substream(seed, DOMAIN_DATA, eta_idx, rep)
            data1 = sample_scenario(scenario, n1, 0.0, rng)
            data2 = sample_scenario(scenario, n - n1, float(eta), rng)
            pooled = np.vstack([data1, data2])
            maps = {kind: empirical_map(pooled, grids[kind]) for kind in needed_kinds}
            for test in rank_tests:
                kind, score = TEST_GRIDS[test]
                statistic = rank_statistic(scored_sample(maps[kind], score), n1)
                if statistic > tables[test].critical_value:
                    rejections[test][eta_idx] += 1
            if HOTELLING_ID in tests:
                if hotelling(data1, data2) > hotelling_critical:
                    rejections[HOTELLING_ID][eta_idx] += 1
        if progress is not None:
            progress(eta_idx + 1, len(shifts))

    rates = {
        (test, float(eta)): rejections[test][i] / reps
        for test in tests
        for i, eta in enumerate(shifts)
    }
    return PowerCurve(
        scenario=scenario,
        n=n,
        n1=n1,
        tests=tuple(tests),
        shifts=tuple(float(e) for e in shifts),
        rates=rates,
        reps=reps,
        seed=seed,
        alpha=alpha,
    )
