"""Empirical vector-rank maps via exact optimal assignment.

The empirical center-outward map sends the n observations onto the n grid
points through the permutation minimizing the total squared Euclidean cost.
The optimum is found exactly with SciPy's shortest-augmenting-path solver
(Jonker-Volgenant style, O(n^3)); its output is deterministic, and among the
non-unique optima created by duplicated origin atoms it always returns the
same one for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .grids import Grid

__all__ = ["Assignment", "EmpiricalMap", "as_data_matrix", "cost_matrix",
           "solve_assignment", "empirical_map"]


def as_data_matrix(data, dim: int | None = None) -> np.ndarray:
    """Validate observations as a finite (n, d) float array."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"data must be a nonempty (n, d) array, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"data has dimension {arr.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("data contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Assignment:
    """Optimal pairing: observation i is sent to grid point ``perm[i]``."""

    perm: np.ndarray
    total_cost: float

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        n = perm.shape[0]
        if not np.array_equal(np.sort(perm), np.arange(n)):
            raise ValueError("perm is not a permutation of 0..n-1")
        perm.flags.writeable = False
        object.__setattr__(self, "perm", perm)


@dataclass(frozen=True, eq=False)
class EmpiricalMap:
    """Empirical vector-rank map: ``images[i]`` is observation i's rank vector."""

    grid: Grid
    assignment: Assignment
    images: np.ndarray


def cost_matrix(data, grid: Grid) -> np.ndarray:
    """Squared-distance matrix: entry (i, j) is ||Z_i - g_j||^2."""
    data = as_data_matrix(data, grid.dim)
    if data.shape[0] != grid.n:
        raise ValueError(f"{data.shape[0]} observations but grid has {grid.n} points")
    diff = data[:, None, :] - grid.points[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def solve_assignment(cost: np.ndarray) -> Assignment:
    """Globally optimal permutation for a square cost matrix.

    Optimal cost is the guarantee; determinism is the contract.  Duplicated
    columns (e.g. the grid's origin copies) make the optimum non-unique, so
    the result is canonicalized within each group of identical columns:
    observations landing in a group take its column indices in increasing
    order.  The returned permutation is then invariant under any
    cost-preserving transformation of the inputs.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty_like(cols)
    perm[rows] = cols
    groups: dict[bytes, list[int]] = {}
    for j in range(cost.shape[1]):
        groups.setdefault(cost[:, j].tobytes(), []).append(j)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(len(perm))
    for members in groups.values():
        if len(members) > 1:
            obs = np.sort(inverse[members])
            perm[obs] = members
    return Assignment(perm, float(cost[np.arange(len(perm)), perm].sum()))


def empirical_map(data, grid: Grid) -> EmpiricalMap:
    """Optimal pairing of observations with grid points (the vector ranks)."""
    assignment = solve_assignment(cost_matrix(data, grid))
    images = grid.points[assignment.perm]
    return EmpiricalMap(grid, assignment, images)
