"""Measure-transportation multivariate ranks and distribution-free tests.

Vector ranks are defined by optimally pairing a sample with a deterministic
reference grid (spherical-uniform shells, cubic Halton points, or their
Gaussian images) under squared Euclidean cost.  Score transforms of the rank
vectors feed quadratic two-sample location statistics whose null
distributions are data-free and tabulated by Monte Carlo.  A simulation
harness estimates finite-sample power over shift alternatives.
"""

from .grids import (
    Factorization,
    Grid,
    ReferenceKind,
    build_grid,
    halton,
    optimal_factorization,
    sphere_directions,
    spherical_uniform_qmc,
    w2_to_reference,
)
from .scores import RankSign, ScoreKind, ScoredSample, extract_rank_sign, score, scored_sample
from .simulate import PowerCurve, Scenario, ScenarioKind, power_curve, sample_scenario
from .special import inv_cdf_chisq, inv_cdf_normal
from .transport import Assignment, EmpiricalMap, cost_matrix, empirical_map, solve_assignment
from .two_sample import (
    CriticalValueTable,
    TestResult,
    TwoSampleConfig,
    delta_statistic,
    exact_null_covariance,
    hotelling,
    mc_critical_value,
    rank_statistic,
    two_sample_test,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CriticalValueTable",
    "EmpiricalMap",
    "Factorization",
    "Grid",
    "PowerCurve",
    "RankSign",
    "ReferenceKind",
    "Scenario",
    "ScenarioKind",
    "ScoreKind",
    "ScoredSample",
    "TestResult",
    "TwoSampleConfig",
    "build_grid",
    "cost_matrix",
    "delta_statistic",
    "empirical_map",
    "exact_null_covariance",
    "extract_rank_sign",
    "halton",
    "hotelling",
    "inv_cdf_chisq",
    "inv_cdf_normal",
    "mc_critical_value",
    "optimal_factorization",
    "power_curve",
    "rank_statistic",
    "sample_scenario",
    "score",
    "scored_sample",
    "solve_assignment",
    "sphere_directions",
    "spherical_uniform_qmc",
    "two_sample_test",
    "w2_to_reference",
]
