"""Reference grids for measure-transportation vector ranks.

Four discrete reference measures are supported, each approximating a
continuous reference law with n atoms:

* spherical uniform -- n_r concentric shells of n_s directions each at radii
  j/(n_r+1), plus n_0 copies of the origin (n = n_r*n_s + n_0);
* cubic uniform -- a Halton sequence over (0,1)^d;
* Gaussian spherical -- the shell grid with radii moved to the chi-square
  radial quantiles of N(0, I_d);
* Gaussian cubic -- the componentwise normal quantile image of the Halton
  sequence.

Shell directions are deterministic quasi-uniform point sets on the unit
sphere: equispaced on the circle, normal-quantile-transformed Halton points
(normalized) in higher dimension.  The shell factorization
n = n_r*n_s + n_0 is chosen by minimizing the exact Wasserstein-2 distance
between the candidate grid and a fine QMC discretization of the reference
law.

For d = 1 the spherical grids collapse to the classical symmetric rank grids
{2 i/(n+1) - 1 : i = 1..n} (uniform) and their normal-quantile images
(Gaussian), recovering traditional univariate ranks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._flow import transport_cost
from .special import inv_cdf_chisq, inv_cdf_normal

__all__ = [
    "ReferenceKind",
    "Factorization",
    "Grid",
    "halton",
    "sphere_directions",
    "build_grid",
    "spherical_uniform_qmc",
    "w2_to_reference",
    "optimal_factorization",
]

_DEGENERATE_NORM = 1e-12


class ReferenceKind(str, Enum):
    """Which continuous reference law a grid discretizes, and how."""

    SPHERICAL_UNIFORM = "spherical-uniform"
    CUBIC_UNIFORM = "cubic-uniform"
    GAUSSIAN_SPHERICAL = "gaussian-spherical"
    GAUSSIAN_CUBIC = "gaussian-cubic"

    @property
    def is_spherical(self) -> bool:
        """True for the shell-structured (rank/sign factorizable) grids."""
        return self in (ReferenceKind.SPHERICAL_UNIFORM, ReferenceKind.GAUSSIAN_SPHERICAL)


@dataclass(frozen=True)
class Factorization:
    """Decomposition n = n_r * n_s + n_0 of a sample size into shells,
    directions per shell, and origin copies."""

    n: int
    n_r: int
    n_s: int
    n_0: int

    def __post_init__(self):
        if min(self.n, self.n_r, self.n_s, self.n_0) < 0:
            raise ValueError("factorization fields must be nonnegative")
        if self.n != self.n_r * self.n_s + self.n_0:
            raise ValueError(
                f"inconsistent factorization: {self.n} != "
                f"{self.n_r}*{self.n_s} + {self.n_0}"
            )
        if self.n_r >= 1 and self.n_s >= 1 and self.n_0 >= min(self.n_r, self.n_s):
            raise ValueError(
                f"origin count {self.n_0} must be < min(n_r, n_s) = "
                f"{min(self.n_r, self.n_s)}"
            )


@dataclass(frozen=True, eq=False)
class Grid:
    """A discrete reference measure: n points in R^d in construction order.

    For spherical kinds the ordering contract is shell-major, direction-minor,
    origin copies last; rank extraction reads the shell index from position.
    """

    dim: int
    kind: ReferenceKind
    points: np.ndarray
    factorization: Factorization | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"points must have shape (n, {self.dim})")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.kind.is_spherical:
            if self.factorization is None:
                raise ValueError("spherical grids require a factorization")
            if self.factorization.n != self.n:
                raise ValueError("factorization size does not match point count")
        elif self.factorization is not None:
            raise ValueError(f"{self.kind.value} grids carry no factorization")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def identity(self) -> tuple:
        """Hashable construction identity (used as a cache-key component)."""
        f = self.factorization
        return (
            self.dim,
            self.kind.value,
            self.n,
            None if f is None else (f.n_r, f.n_s, f.n_0),
        )


def _first_primes(k: int) -> list[int]:
    primes: list[int] = []
    cand = 2
    while len(primes) < k:
        if all(cand % p for p in primes):
            primes.append(cand)
        cand += 1
    return primes


def _radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    out = np.zeros(indices.shape, dtype=float)
    scale = 1.0 / base
    rem = indices.copy()
    while rem.any():
        out += scale * (rem % base)
        rem //= base
        scale /= base
    return out


def halton(dim: int, count: int, skip: int = 1) -> np.ndarray:
    """First `count` points of the plain Halton sequence, starting at `skip`.

    Bases are the first `dim` primes; point i is the vector of radical
    inverses at index ``skip + i``.  Index 0 (the all-zeros point) is excluded
    by requiring ``skip >= 1``, so every coordinate lies strictly in (0, 1).

    Returns an array of shape (count, dim).
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if skip < 1:
        raise ValueError(f"skip must be >= 1, got {skip}")
    indices = np.arange(skip, skip + count, dtype=np.int64)
    cols = [_radical_inverse(indices, b) for b in _first_primes(dim)]
    return np.column_stack(cols)


def _normalized_gaussian(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map cube points through the normal quantile and normalize.

    Returns (directions, keep_mask); rows whose pre-normalization image is
    numerically zero are flagged for skipping.
    """
    z = inv_cdf_normal(u)
    norms = np.linalg.norm(z, axis=1)
    keep = norms >= _DEGENERATE_NORM
    dirs = np.zeros_like(z)
    dirs[keep] = z[keep] / norms[keep, None]
    return dirs, keep


def sphere_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform directions on the unit sphere S^{d-1}.

    On the circle (dim = 2) the minimal-discrepancy point set of any given
    size is the equispaced one, so the directions are the vertices of a
    regular count-gon starting at (1, 0).  For dim >= 3 each dim-dimensional
    Halton point is pushed through the componentwise standard normal quantile
    and normalized; a spherical Gaussian vector divided by its norm is
    uniform on the sphere, so the sequence inherits the Halton points'
    equidistribution.  Points mapping to a numerically zero vector are
    skipped and the sequence extended.
    """
    if dim < 2:
        raise ValueError(f"sphere directions require dim >= 2, got {dim}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    out = np.empty((count, dim))
    have = 0
    start = 1
    while have < count:
        block = halton(dim, count - have, skip=start)
        start += count - have
        dirs, keep = _normalized_gaussian(block)
        good = dirs[keep]
        out[have : have + len(good)] = good
        have += len(good)
    return out


def _shell_quantiles_1d(n: int) -> np.ndarray:
    # Positive atoms of {2 i/(n+1) - 1 : i = 1..n}: radii (2j - 1 + n%2)/(n+1).
    n_r = n // 2
    j = np.arange(1, n_r + 1, dtype=float)
    return (2.0 * j - 1.0 + (n % 2)) / (n + 1.0)


def _spherical_points(dim, n, fact, radial_quantiles_to_radii):
    """Shell-major/direction-minor point array for a shell grid."""
    if dim == 1:
        quantiles = _shell_quantiles_1d(n)
        radii = radial_quantiles_to_radii(quantiles)
        dirs = np.array([[-1.0], [1.0]])
    else:
        quantiles = np.arange(1, fact.n_r + 1, dtype=float) / (fact.n_r + 1.0)
        radii = radial_quantiles_to_radii(quantiles)
        dirs = sphere_directions(dim, fact.n_s)
    shells = radii[:, None, None] * dirs[None, :, :]
    points = shells.reshape(fact.n_r * fact.n_s, dim)
    if fact.n_0:
        points = np.vstack([points, np.zeros((fact.n_0, dim))])
    return points


def build_grid(
    dim: int,
    n: int,
    kind: ReferenceKind,
    fact: Factorization | None = None,
) -> Grid:
    """Construct one of the four reference grids.

    For spherical kinds the factorization is taken from `fact` or computed by
    :func:`optimal_factorization` (a Wasserstein search; pass a precomputed
    factorization in hot loops).  Cubic kinds take no factorization.

    The construction is fully deterministic: identical arguments yield
    bit-identical grids.
    """
    kind = ReferenceKind(kind)
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if n < dim + 1:
        raise ValueError(f"need n >= dim + 1 points, got n={n} for dim={dim}")
    if kind is ReferenceKind.CUBIC_UNIFORM:
        if fact is not None:
            raise ValueError("cubic grids take no factorization")
        return Grid(dim, kind, halton(dim, n, skip=1))
    if kind is ReferenceKind.GAUSSIAN_CUBIC:
        if fact is not None:
            raise ValueError("cubic grids take no factorization")
        return Grid(dim, kind, inv_cdf_normal(halton(dim, n, skip=1)))

    if n < 2:
        raise ValueError(f"spherical grids need n >= 2, got {n}")
    if fact is None:
        fact = optimal_factorization(n, dim, kind)
    if fact.n != n:
        raise ValueError(f"factorization is for n={fact.n}, grid has n={n}")
    if kind is ReferenceKind.SPHERICAL_UNIFORM:
        to_radii = lambda q: q
    else:
        to_radii = lambda q: np.sqrt(inv_cdf_chisq(q, dim))
    return Grid(dim, kind, _spherical_points(dim, n, fact, to_radii), fact)


def spherical_uniform_qmc(dim: int, count: int) -> np.ndarray:
    """Deterministic QMC discretization of the spherical uniform law.

    Point i is ``r_i * v_i`` with the radius taken from the first coordinate
    of a (dim+1)-dimensional Halton point and the direction from the
    normal-quantile transform of the remaining coordinates.  The radial law
    is uniform on (0, 1) -- not volume-uniform on the ball.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return _reference_qmc(dim, count, gaussian=False)


def _reference_qmc(dim: int, count: int, gaussian: bool) -> np.ndarray:
    """QMC point cloud for the spherical uniform or spherical Gaussian law."""
    out = np.empty((count, dim))
    have = 0
    start = 1
    while have < count:
        block = halton(dim + 1, count - have, skip=start)
        start += count - have
        u_rad = block[:, 0]
        if dim == 1:
            z = inv_cdf_normal(block[:, 1:])
            norms = np.abs(z[:, 0])
            keep = norms >= _DEGENERATE_NORM
            dirs = np.sign(z)
        else:
            dirs, keep = _normalized_gaussian(block[:, 1:])
        radii = np.sqrt(inv_cdf_chisq(u_rad, dim)) if gaussian else u_rad
        pts = (radii[:, None] * dirs)[keep]
        out[have : have + len(pts)] = pts
        have += len(pts)
    return out


def _round_up_multiple(m: int, n: int) -> int:
    return ((m + n - 1) // n) * n


def default_discretization_size(n: int, kind: ReferenceKind) -> int:
    """Default QMC discretization size for the Wasserstein oracle.

    The Gaussian reference needs a finer discretization than the compactly
    supported spherical uniform: its tail mass is what distinguishes
    competing shell counts, and too coarse a point cloud truncates it.
    """
    factor = 30 if ReferenceKind(kind) is ReferenceKind.GAUSSIAN_SPHERICAL else 10
    return max(2000, factor * n)


def w2_to_reference(grid: Grid, m: int | None = None) -> float:
    """Exact W2 distance from a shell grid to its discretized reference law.

    The grid measure (mass 1/n per point, n_0/n at the origin) is compared
    with the uniform measure on an m-point QMC discretization of the
    reference law by solving the balanced transportation problem exactly
    under squared-distance cost; the square root of the optimal cost is
    returned.  `m` defaults to ``max(2000, 10 n)`` and is rounded up to a
    multiple of n so that every atom mass is an integer multiple of 1/m.
    """
    if not grid.kind.is_spherical:
        raise ValueError(f"Wasserstein oracle applies to spherical grids, not {grid.kind.value}")
    if m is None:
        m = default_discretization_size(grid.n, grid.kind)
    if m < grid.n:
        raise ValueError(f"discretization size {m} < grid size {grid.n}")
    m = _round_up_multiple(m, grid.n)
    sinks = _reference_qmc(grid.dim, m, gaussian=grid.kind is ReferenceKind.GAUSSIAN_SPHERICAL)
    return _w2_against_sinks(grid, sinks)


def _w2_against_sinks(grid: Grid, sinks: np.ndarray) -> float:
    fact = grid.factorization
    m = sinks.shape[0]
    unit = m // grid.n
    n_body = fact.n_r * fact.n_s
    sources = grid.points[:n_body]
    counts = np.full(n_body, unit, dtype=np.int64)
    if fact.n_0:
        sources = np.vstack([sources, np.zeros((1, grid.dim))])
        counts = np.append(counts, unit * fact.n_0)
    assert counts.sum() == m, "atom masses failed to balance"
    return math.sqrt(transport_cost(sources, counts, sinks))


def _feasible_factorizations(n: int) -> list[Factorization]:
    out = []
    for n_r in range(1, n + 1):
        n_s = n // n_r
        n_0 = n - n_r * n_s
        if n_s >= 1 and n_0 < min(n_r, n_s):
            out.append(Factorization(n, n_r, n_s, n_0))
    return out


def _candidate_cost(args):
    dim, n, kind, fact, sinks = args
    grid = build_grid(dim, n, kind, fact)
    return _w2_against_sinks(grid, sinks)


def optimal_factorization(
    n: int,
    dim: int,
    kind: ReferenceKind,
    m: int | None = None,
    workers: int = 1,
) -> Factorization:
    """Shell factorization minimizing the W2 distance to the reference law.

    Enumerates every n_r in [1, n] with n_s = floor(n/n_r) and
    n_0 = n - n_r*n_s, discards candidates violating n_0 < min(n_r, n_s),
    and returns the candidate whose grid is W2-closest to the QMC-discretized
    reference.  Ties break toward smaller n_r.  Candidates are independent;
    `workers` > 1 evaluates them in a process pool, reduced in candidate
    order.

    For d = 1 the factorization is the closed-form (n//2 shells, 2
    directions, n mod 2 origins) of the classical symmetric rank grid.
    """
    kind = ReferenceKind(kind)
    if not kind.is_spherical:
        raise ValueError(f"factorization applies to spherical kinds, not {kind.value}")
    if n < 2:
        raise ValueError(f"factorization needs n >= 2, got {n}")
    if dim == 1:
        return Factorization(n, n // 2, 2, n % 2)
    if m is None:
        m = default_discretization_size(n, kind)
    m = _round_up_multiple(max(m, n), n)
    sinks = _reference_qmc(dim, m, gaussian=kind is ReferenceKind.GAUSSIAN_SPHERICAL)
    candidates = _feasible_factorizations(n)
    jobs = [(dim, n, kind, fact, sinks) for fact in candidates]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            costs = list(pool.map(_candidate_cost, jobs, chunksize=4))
    else:
        costs = [_candidate_cost(job) for job in jobs]
    best = min(range(len(candidates)), key=lambda i: (costs[i], candidates[i].n_r))
    return candidates[best]
