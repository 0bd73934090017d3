"""Rank/sign extraction and the three score functions."""

import numpy as np
import pytest

from otrank import (
    Factorization,
    ReferenceKind,
    ScoreKind,
    build_grid,
    empirical_map,
    extract_rank_sign,
    inv_cdf_chisq,
    inv_cdf_normal,
    score,
    scored_sample,
)

U = ReferenceKind.SPHERICAL_UNIFORM
G = ReferenceKind.GAUSSIAN_SPHERICAL
CUBE = ReferenceKind.CUBIC_UNIFORM
GCUBE = ReferenceKind.GAUSSIAN_CUBIC

FACT100 = Factorization(100, 6, 16, 4)


@pytest.fixture(scope="module")
def grid100():
    return build_grid(2, 100, U, FACT100)


@pytest.fixture(scope="module")
def sample100(grid100):
    rng = np.random.default_rng(42)
    return rng.normal(size=(100, 2))


class TestExtractRankSign:
    def test_full_sample_rank_counts(self, grid100, sample100):
        rs = extract_rank_sign(empirical_map(sample100, grid100))
        ranks = np.array([r.rank for r in rs])
        for j in range(1, 7):
            assert (ranks == j).sum() == 16
        assert (ranks == 0).sum() == 4

    def test_origin_images_get_zero_rank_and_sign(self, grid100, sample100):
        emap = empirical_map(sample100, grid100)
        rs = extract_rank_sign(emap)
        for i, g in enumerate(emap.assignment.perm):
            if g >= 96:
                assert rs[i].rank == 0
                np.testing.assert_array_equal(rs[i].sign, 0.0)

    def test_rank_from_shell_norm(self, grid100, sample100):
        emap = empirical_map(sample100, grid100)
        rs = extract_rank_sign(emap)
        for i in range(100):
            norm = np.linalg.norm(emap.images[i])
            if norm > 0:
                assert rs[i].rank == round(7 * norm)
                np.testing.assert_allclose(
                    rs[i].sign, emap.images[i] / norm, atol=1e-12
                )

    def test_reconstruction_identity(self, grid100, sample100):
        emap = empirical_map(sample100, grid100)
        rs = extract_rank_sign(emap)
        rebuilt = np.array([(r.rank / 7.0) * r.sign for r in rs])
        np.testing.assert_allclose(rebuilt, emap.images, atol=1e-12)

    def test_cubic_grid_unsupported(self, sample100):
        grid = build_grid(2, 100, CUBE)
        with pytest.raises(ValueError):
            extract_rank_sign(empirical_map(sample100, grid))


class TestScoreFunction:
    def test_wilcoxon_identity(self):
        np.testing.assert_array_equal(
            score(np.array([0.3, -0.4]), ScoreKind.WILCOXON, 2), [0.3, -0.4]
        )

    def test_vdw_spherical_closed_form(self):
        got = score(np.array([0.5, 0.0]), ScoreKind.VDW_SPHERICAL, 2)
        np.testing.assert_allclose(got, [np.sqrt(-2 * np.log(0.5)), 0.0], atol=1e-12)
        assert got[0] == pytest.approx(1.17741, abs=1e-5)

    def test_vdw_spherical_origin_maps_to_zero(self):
        np.testing.assert_array_equal(score(np.zeros(3), ScoreKind.VDW_SPHERICAL, 3), 0.0)

    def test_vdw_marginal_median_is_zero(self):
        np.testing.assert_allclose(
            score(np.array([0.5, 0.5]), ScoreKind.VDW_MARGINAL, 2), 0.0, atol=1e-12
        )

    def test_domain_violations(self):
        with pytest.raises(ValueError):
            score(np.array([1.2, 0.0]), ScoreKind.VDW_SPHERICAL, 2)
        with pytest.raises(ValueError):
            score(np.array([0.5, 1.5]), ScoreKind.VDW_MARGINAL, 2)


class TestScoredSample:
    def test_gaussian_grid_wilcoxon_values_are_gridpoints(self, sample100):
        grid = build_grid(2, 100, G, Factorization(100, 7, 14, 2))
        emap = empirical_map(sample100, grid)
        scored = scored_sample(emap, ScoreKind.WILCOXON)
        np.testing.assert_array_equal(scored.values, emap.images)

    def test_uniform_vdw_equals_gaussian_wilcoxon_multiset(self, sample100):
        # Same factorization: both value multisets are the chi-square-radius
        # shells, reached through different transports.  Compared by optimal
        # matching because coordinate sorts are unstable under mathematical
        # ties (the regular polygon's sine pairs).
        from scipy.optimize import linear_sum_assignment

        fact = FACT100
        uniform = build_grid(2, 100, U, fact)
        gaussian = build_grid(2, 100, G, fact)
        v1 = scored_sample(empirical_map(sample100, uniform), ScoreKind.VDW_SPHERICAL).values
        v2 = scored_sample(empirical_map(sample100, gaussian), ScoreKind.WILCOXON).values
        dist = np.linalg.norm(v1[:, None, :] - v2[None, :, :], axis=-1)
        rows, cols = linear_sum_assignment(dist)
        assert dist[rows, cols].max() < 1e-12

    def test_d1_marginal_vdw_is_monotone_quantile_image(self):
        grid = build_grid(1, 16, CUBE)
        rng = np.random.default_rng(5)
        data = rng.normal(size=(16, 1))
        scored = scored_sample(empirical_map(data, grid), ScoreKind.VDW_MARGINAL)
        got = np.sort(scored.values[:, 0])
        want = inv_cdf_normal(np.sort(grid.points[:, 0]))
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_multiset_is_data_independent(self, grid100):
        rng = np.random.default_rng(9)
        a = scored_sample(
            empirical_map(rng.normal(size=(100, 2)), grid100), ScoreKind.VDW_SPHERICAL
        ).values
        b = scored_sample(
            empirical_map(np.tan(np.pi * (rng.random((100, 2)) - 0.5)), grid100),
            ScoreKind.VDW_SPHERICAL,
        ).values
        np.testing.assert_allclose(a[np.lexsort(a.T)], b[np.lexsort(b.T)], atol=1e-15)

    def test_value_sum_is_deterministic_constant(self, grid100):
        rng = np.random.default_rng(10)
        sums = []
        for _ in range(2):
            data = rng.standard_t(3, size=(100, 2))
            sums.append(
                scored_sample(empirical_map(data, grid100), ScoreKind.WILCOXON).values.sum(axis=0)
            )
        np.testing.assert_allclose(sums[0], sums[1], atol=1e-10)

    def test_vdw_shell_norms_exact(self, grid100, sample100):
        scored = scored_sample(empirical_map(sample100, grid100), ScoreKind.VDW_SPHERICAL)
        norms = np.linalg.norm(scored.values, axis=1)
        for j in range(1, 7):
            want = np.sqrt(inv_cdf_chisq(j / 7.0, 2))
            mask = np.abs(norms - want) < 1e-12
            assert mask.sum() == 16

    @pytest.mark.parametrize(
        "kind,score_kind",
        [
            (CUBE, ScoreKind.VDW_SPHERICAL),
            (U, ScoreKind.VDW_MARGINAL),
            (G, ScoreKind.VDW_SPHERICAL),
            (GCUBE, ScoreKind.VDW_MARGINAL),
        ],
    )
    def test_incompatible_pairs_rejected(self, sample100, kind, score_kind):
        if kind.is_spherical:
            grid = build_grid(2, 100, kind, FACT100)
        else:
            grid = build_grid(2, 100, kind)
        emap = empirical_map(sample100, grid)
        with pytest.raises(ValueError):
            scored_sample(emap, score_kind)
