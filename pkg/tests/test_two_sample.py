"""Rank statistics, exact permutation covariance, and Monte-Carlo calibration."""

import itertools
import math

import numpy as np
import pytest

from otrank import (
    Factorization,
    ReferenceKind,
    ScoreKind,
    TwoSampleConfig,
    build_grid,
    delta_statistic,
    empirical_map,
    exact_null_covariance,
    hotelling,
    inv_cdf_chisq,
    mc_critical_value,
    rank_statistic,
    scored_sample,
    two_sample_test,
)
from otrank.scores import ScoredSample

U = ReferenceKind.SPHERICAL_UNIFORM


def as_scored(values):
    values = np.asarray(values, dtype=float)
    return ScoredSample(values.shape[1], values, ScoreKind.WILCOXON, ("test",))


class TestDeltaStatistic:
    def test_equal_values_give_zero(self):
        scored = as_scored(np.ones((6, 2)))
        np.testing.assert_array_equal(delta_statistic(scored, 3), 0.0)

    def test_two_point_algebra(self):
        v, w = np.array([2.0, -1.0]), np.array([0.5, 3.0])
        scored = as_scored([v, w])
        np.testing.assert_allclose(delta_statistic(scored, 1), (v - w) / 2.0, atol=1e-15)

    def test_recentered_equals_scaled_mean_difference(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=(10, 3))
        n1 = 4
        delta = delta_statistic(as_scored(values), n1)
        mean_diff = values[:n1].mean(0) - values[n1:].mean(0)
        np.testing.assert_allclose(delta, (6 / 10) * mean_diff, atol=1e-14)

    def test_out_of_range_n1(self):
        scored = as_scored(np.zeros((5, 2)))
        for n1 in (0, 5, 7):
            with pytest.raises(ValueError):
                delta_statistic(scored, n1)


class TestExactNullCovariance:
    def test_constant_values_give_zero_matrix(self):
        sigma = exact_null_covariance(np.ones((8, 3)) * 4.2, 3)
        np.testing.assert_array_equal(sigma, 0.0)

    def test_two_point_enumeration(self):
        # v = {-1, +1}, n1 = 1: delta is -1 or +1 with probability 1/2 each.
        sigma = exact_null_covariance(np.array([[-1.0], [1.0]]), 1)
        assert sigma[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_matches_monte_carlo_oracle(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=(6, 2))
        sigma = exact_null_covariance(values, 3)
        reps = 10**6
        picks = np.argsort(rng.random((reps, 6)), axis=1)[:, :3]
        deltas = values[picks].mean(axis=1) - values.mean(axis=0)
        mc = deltas.T @ deltas / reps
        se = np.abs(sigma) / math.sqrt(reps) * 3 + 3 * np.std(
            deltas[:, :, None] * deltas[:, None, :], axis=0
        ) / math.sqrt(reps)
        assert np.all(np.abs(mc - sigma) <= se)

    def test_degenerate_n1_rejected(self):
        with pytest.raises(ValueError):
            exact_null_covariance(np.zeros((4, 2)), 0)
        with pytest.raises(ValueError):
            exact_null_covariance(np.zeros((4, 2)), 4)


def wilcoxon_rank_sum_two_sided_reject(sample1_ranks, n1, n2, alpha):
    """Textbook exact two-sided Wilcoxon rank-sum decision by enumeration."""
    w = sum(sample1_ranks)
    all_ranks = range(1, n1 + n2 + 1)
    ws = [sum(c) for c in itertools.combinations(all_ranks, n1)]
    mu = n1 * (n1 + n2 + 1) / 2.0
    p = sum(1 for v in ws if abs(v - mu) >= abs(w - mu)) / len(ws)
    return p <= alpha


class TestRankStatistic:
    def test_zero_delta_gives_zero(self):
        e1, e2 = np.eye(2)
        scored = as_scored([e1, -e1, e2, -e2])  # sample-1 mean = overall mean
        assert rank_statistic(scored, 2) == 0.0

    def test_d1_decisions_match_textbook_wilcoxon(self):
        # n = 8, n1 = n2 = 4: compare decisions across all 70 assignments.
        grid = build_grid(1, 8, U)
        table = mc_critical_value(grid, ScoreKind.WILCOXON, 4, alpha=0.05, reps=20000, seed=3)
        data = np.array([-3.1, -1.7, -0.4, 0.2, 0.9, 1.8, 2.6, 4.0])
        ours, textbook = [], []
        for subset in itertools.combinations(range(8), 4):
            rest = [i for i in range(8) if i not in subset]
            arranged = np.concatenate([data[list(subset)], data[rest]])[:, None]
            scored = scored_sample(empirical_map(arranged, grid), ScoreKind.WILCOXON)
            stat = rank_statistic(scored, 4)
            ours.append(stat > table.critical_value)
            ranks = [sorted(data).index(v) + 1 for v in data[list(subset)]]
            textbook.append(wilcoxon_rank_sum_two_sided_reject(ranks, 4, 4, 0.05))
        assert ours == textbook
        assert sum(ours) == 2  # |W - 18| = 8 in exactly two assignments

    def test_affine_invariance(self):
        rng = np.random.default_rng(17)
        values = rng.normal(size=(30, 3))
        matrix = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        base = rank_statistic(as_scored(values), 12)
        mapped = rank_statistic(as_scored(values @ matrix.T), 12)
        assert mapped == pytest.approx(base, abs=1e-8)


class TestHotelling:
    def test_identical_samples_give_zero(self):
        rng = np.random.default_rng(2)
        data = rng.normal(size=(10, 2))
        assert hotelling(data, data) == pytest.approx(0.0, abs=1e-20)

    def test_d1_equals_squared_pooled_t(self):
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=(12, 1)), rng.normal(size=(9, 1)) + 0.5
        pooled_var = (11 * x.var(ddof=1) + 8 * y.var(ddof=1)) / 19
        t = (x.mean() - y.mean()) / math.sqrt(pooled_var * (1 / 12 + 1 / 9))
        assert hotelling(x, y) == pytest.approx(t**2, abs=1e-10)

    def test_null_calibration_chi2(self):
        rng = np.random.default_rng(11)
        critical = inv_cdf_chisq(0.95, 2)
        rejections = 0
        for _ in range(2000):
            x = rng.normal(size=(50, 2))
            y = rng.normal(size=(50, 2))
            rejections += hotelling(x, y) > critical
        assert 0.035 <= rejections / 2000 <= 0.065

    def test_small_samples_rejected(self):
        with pytest.raises(ValueError):
            hotelling(np.zeros((2, 2)), np.ones((5, 2)))


@pytest.fixture(scope="module")
def grid20():
    return build_grid(2, 20, U, Factorization(20, 3, 6, 2))


class TestMcCriticalValue:
    def test_order_statistic_index(self):
        from otrank.two_sample import _critical_index

        assert _critical_index(0.05, 39999) == 38000
        assert _critical_index(0.05, 1000) == 951
        assert _critical_index(1e-9, 1000) == 1000  # clamped

    def test_tiny_case_matches_exhaustive_null(self):
        # n = 6, n1 = 3: the exact null has C(6,3) = 20 equally likely values.
        grid = build_grid(2, 6, U, Factorization(6, 1, 6, 0))
        values = grid.points
        stats = []
        for subset in itertools.combinations(range(6), 3):
            scored = as_scored(values[list(subset) + [i for i in range(6) if i not in subset]])
            stats.append(rank_statistic(scored, 3))
        exact = np.sort(stats)
        table = mc_critical_value(grid, ScoreKind.WILCOXON, 3, alpha=0.05, reps=10**5, seed=0)
        # Complementary subsets give equal statistics, so each of the ~10
        # distinct atoms has mass 0.1 and the exact 95% quantile is the
        # largest atom; the Monte-Carlo order statistic must land on it.
        assert table.critical_value == pytest.approx(exact[-1], abs=1e-12)

    def test_same_seed_identical_different_seed_close(self, grid20):
        a = mc_critical_value(grid20, ScoreKind.WILCOXON, 10, 0.05, 40000, seed=5)
        b = mc_critical_value(grid20, ScoreKind.WILCOXON, 10, 0.05, 40000, seed=5)
        c = mc_critical_value(grid20, ScoreKind.WILCOXON, 10, 0.05, 40000, seed=6)
        assert a.critical_value == b.critical_value
        np.testing.assert_array_equal(a.null_sample, b.null_sample)
        assert abs(a.critical_value - c.critical_value) < 0.02 * a.critical_value

    def test_reps_floor(self, grid20):
        with pytest.raises(ValueError):
            mc_critical_value(grid20, ScoreKind.WILCOXON, 10, 0.05, 999, seed=0)


class TestTwoSampleTest:
    def test_deterministic(self):
        grid = build_grid(2, 20, U, Factorization(20, 3, 6, 2))
        rng = np.random.default_rng(8)
        d1, d2 = rng.normal(size=(10, 2)), rng.normal(size=(10, 2))
        cfg = TwoSampleConfig(10, 10, U, ScoreKind.WILCOXON, mc_reps=2000, seed=9)
        r1 = two_sample_test(d1, d2, cfg, grid=grid)
        r2 = two_sample_test(d1, d2, cfg, grid=grid)
        assert r1 == r2

    def test_reject_iff_statistic_exceeds_critical(self):
        grid = build_grid(2, 20, U, Factorization(20, 3, 6, 2))
        rng = np.random.default_rng(15)
        d1 = rng.normal(size=(10, 2))
        d2 = rng.normal(size=(10, 2)) + 3.0
        cfg = TwoSampleConfig(10, 10, U, ScoreKind.WILCOXON, mc_reps=2000, seed=1)
        res = two_sample_test(d1, d2, cfg, grid=grid)
        assert res.reject == (res.statistic > res.critical_value)
        assert 0.0 < res.p_value <= 1.0
        assert res.reject  # a 3-sigma shift at n=20 is unmistakable

    def test_p_value_super_uniform_under_null(self):
        grid = build_grid(2, 100, U, Factorization(100, 6, 16, 4))
        table = mc_critical_value(grid, ScoreKind.WILCOXON, 50, 0.05, 40000, seed=2)
        rng = np.random.default_rng(3)
        pvals = []
        for _ in range(2000):
            pooled = rng.normal(size=(100, 2))
            scored = scored_sample(empirical_map(pooled, grid), ScoreKind.WILCOXON)
            pvals.append(table.p_value(rank_statistic(scored, 50)))
        pvals = np.array(pvals)
        for alpha in (0.01, 0.05, 0.1):
            assert (pvals <= alpha).mean() <= alpha + 0.015

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TwoSampleConfig(0, 10, U, ScoreKind.WILCOXON)
        with pytest.raises(ValueError):
            TwoSampleConfig(10, 10, U, ScoreKind.WILCOXON, alpha=1.5)
        with pytest.raises(ValueError):
            TwoSampleConfig(10, 10, U, ScoreKind.WILCOXON, mc_reps=10)

    def test_size_mismatch_rejected(self):
        grid = build_grid(2, 20, U, Factorization(20, 3, 6, 2))
        cfg = TwoSampleConfig(10, 10, U, ScoreKind.WILCOXON, mc_reps=2000)
        with pytest.raises(ValueError):
            two_sample_test(np.zeros((9, 2)), np.zeros((10, 2)), cfg, grid=grid)
