"""Center-outward ranks, signs, and score functions.

A spherical grid factorizes each rank vector into a rank (the shell index,
0 for origin copies) and a sign (the unit direction).  Score functions map
rank vectors to the score space before the test statistic is formed:

* Wilcoxon -- the identity;
* spherical van der Waerden -- radial chi-square quantile transform,
  ``sqrt(F^-1_{chi2_d}(||u||)) u / ||u||`` with J(0) = 0;
* marginal van der Waerden -- componentwise normal quantile.

Scores are grid-determined: the multiset of scored values depends only on
the grid and the score kind, never on the data, which is what makes the
resulting tests distribution-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grids import Grid, ReferenceKind
from .special import inv_cdf_chisq, inv_cdf_normal
from .transport import EmpiricalMap

__all__ = ["ScoreKind", "RankSign", "ScoredSample", "extract_rank_sign",
           "score", "score_points", "scored_sample"]


class ScoreKind(str, Enum):
    WILCOXON = "wilcoxon"
    VDW_SPHERICAL = "vdw-spherical"
    VDW_MARGINAL = "vdw-marginal"


# Grids each score kind may be evaluated on.  The Gaussian grids take
# identity (Wilcoxon) scores: the chi-square radii are already built into
# their shells, which is exactly how the Gaussian-reference statistics are
# defined.
_COMPATIBLE = {
    ScoreKind.WILCOXON: frozenset(ReferenceKind),
    ScoreKind.VDW_SPHERICAL: frozenset({ReferenceKind.SPHERICAL_UNIFORM}),
    ScoreKind.VDW_MARGINAL: frozenset({ReferenceKind.CUBIC_UNIFORM}),
}


@dataclass(frozen=True)
class RankSign:
    """Center-outward rank (0..n_r) and unit sign of one observation.

    Rank 0 with a zero sign marks an observation sent to an origin copy.
    """

    rank: int
    sign: np.ndarray


@dataclass(frozen=True, eq=False)
class ScoredSample:
    """Per-observation score vectors J(F(Z_i)) feeding the test statistic."""

    dim: int
    values: np.ndarray
    score: ScoreKind
    grid_id: tuple


def extract_rank_sign(emp_map: EmpiricalMap) -> list[RankSign]:
    """Ranks and signs of every observation under a spherical-grid map.

    The rank is the shell index of the assigned grid point, read from its
    position in the shell-major construction order (no floating-point norm
    matching); the sign is the grid point's direction.
    """
    grid = emp_map.grid
    if not grid.kind.is_spherical:
        raise ValueError(
            f"ranks and signs require a spherical grid; {grid.kind.value} "
            "grids admit no rank/sign factorization"
        )
    fact = grid.factorization
    n_body = fact.n_r * fact.n_s
    out = []
    for g in emp_map.assignment.perm:
        if g >= n_body:
            out.append(RankSign(0, np.zeros(grid.dim)))
        else:
            point = grid.points[g]
            out.append(RankSign(int(g // fact.n_s) + 1, point / np.linalg.norm(point)))
    return out


def score_points(points: np.ndarray, kind: ScoreKind, dim: int) -> np.ndarray:
    """Vectorized score evaluation on an (m, dim) array of reference points."""
    kind = ScoreKind(kind)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"points must have shape (m, {dim})")
    if kind is ScoreKind.WILCOXON:
        return pts.copy()
    if kind is ScoreKind.VDW_SPHERICAL:
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms >= 1.0):
            raise ValueError("spherical vdW scores need ||u|| < 1")
        out = np.zeros_like(pts)
        inside = norms > 0.0
        radial = np.sqrt(inv_cdf_chisq(norms[inside], dim))
        out[inside] = pts[inside] * (radial / norms[inside])[:, None]
        return out
    if np.any((pts <= 0.0) | (pts >= 1.0)):
        raise ValueError("marginal vdW scores need all coordinates in (0, 1)")
    return inv_cdf_normal(pts)


def score(u, kind: ScoreKind, dim: int) -> np.ndarray:
    """Score vector J(u) of a single point of the reference support."""
    u = np.asarray(u, dtype=float)
    if u.shape != (dim,):
        raise ValueError(f"u must be a vector of length {dim}")
    return score_points(u[None, :], kind, dim)[0]


def scored_sample(emp_map: EmpiricalMap, kind: ScoreKind) -> ScoredSample:
    """Apply a score function to every observation's rank vector."""
    kind = ScoreKind(kind)
    grid = emp_map.grid
    if grid.kind not in _COMPATIBLE[kind]:
        raise ValueError(
            f"score {kind.value!r} is not defined on {grid.kind.value!r} grids"
        )
    values = score_points(emp_map.images, kind, grid.dim)
    return ScoredSample(grid.dim, values, kind, grid.identity())


def grid_scores(grid: Grid, kind: ScoreKind) -> np.ndarray:
    """The data-independent score multiset {J(g) : g in grid points}."""
    kind = ScoreKind(kind)
    if grid.kind not in _COMPATIBLE[kind]:
        raise ValueError(
            f"score {kind.value!r} is not defined on {grid.kind.value!r} grids"
        )
    return score_points(grid.points, kind, grid.dim)
