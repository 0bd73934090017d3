"""Exact transportation solver for small-source / large-sink instances.

Solves the balanced transportation problem between a measure with few atoms
(grid points, integer multiples of a common unit mass) and a measure with
many unit-mass atoms (a QMC discretization of a reference law).  The
algorithm is successive shortest augmenting paths with dual potentials,
Jonker-Volgenant style, generalized to capacitated sources: sinks are
introduced one at a time and each is routed to a source with free capacity
along a shortest alternating path under reduced costs.

With n sources and M sinks the typical augmentation settles a single source
(amortized O(n)); only near capacity saturation do longer paths occur, so the
total cost stays far below the O(n M^2) worst case on the balanced, spread-out
instances this package produces.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _assign_sinks(cost_t, cap):
    """Optimal assignment of M unit sinks to n capacitated sources.

    Parameters
    ----------
    cost_t : float64[M, n]
        Transport cost from source i to sink j, sink-major so that every
        relaxation sweep over sources is a contiguous row scan.
    cap : int64[n]
        Source capacities; must sum to M.

    Returns
    -------
    int64[M]
        Index of the source serving each sink in a minimum-cost solution.
    """
    n_sinks, n = cost_t.shape
    pot = np.zeros(n)
    load = np.zeros(n, dtype=np.int64)
    assign = np.full(n_sinks, -1, dtype=np.int64)

    dist = np.empty(n)
    settled = np.empty(n, dtype=np.bool_)
    pred_sink = np.empty(n, dtype=np.int64)

    for j0 in range(n_sinks):
        for i in range(n):
            dist[i] = cost_t[j0, i] - pot[i]
            settled[i] = False
            pred_sink[i] = j0
        final = -1
        d_final = 0.0
        while True:
            best = -1
            best_d = np.inf
            for i in range(n):
                if not settled[i] and dist[i] < best_d:
                    best_d = dist[i]
                    best = i
            i_star = best
            settled[i_star] = True
            if load[i_star] < cap[i_star]:
                final = i_star
                d_final = best_d
                break
            # Relay through every sink currently served by i_star.
            for j in range(j0):
                if assign[j] == i_star:
                    base = best_d - (cost_t[j, i_star] - pot[i_star])
                    for k in range(n):
                        if not settled[k]:
                            nd = base + cost_t[j, k] - pot[k]
                            if nd < dist[k]:
                                dist[k] = nd
                                pred_sink[k] = j
        for i in range(n):
            if settled[i]:
                pot[i] += dist[i] - d_final
        i_cur = final
        while True:
            j = pred_sink[i_cur]
            i_prev = assign[j]
            assign[j] = i_cur
            load[i_cur] += 1
            if j == j0:
                break
            load[i_prev] -= 1
            i_cur = i_prev
    return assign


def transport_cost(sources, counts, sinks):
    """Exact squared-W2 transportation cost between two discrete measures.

    The source measure places mass ``counts[i] / M`` on ``sources[i]``; the
    sink measure places mass ``1 / M`` on each row of `sinks`, where
    ``M = len(sinks) = sum(counts)``.  Ground cost is squared Euclidean
    distance.

    Returns the optimal total cost (the squared Wasserstein-2 distance).
    """
    sources = np.ascontiguousarray(sources, dtype=float)
    sinks = np.ascontiguousarray(sinks, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    n_sinks = sinks.shape[0]
    if counts.sum() != n_sinks:
        raise ValueError(
            f"source counts sum to {counts.sum()}, expected {n_sinks} sinks"
        )
    if np.any(counts < 0):
        raise ValueError("source counts must be nonnegative")
    keep = counts > 0
    sources, counts = sources[keep], counts[keep]
    cost_t = np.ascontiguousarray(
        ((sinks[:, None, :] - sources[None, :, :]) ** 2).sum(axis=-1)
    )
    if not np.all(np.isfinite(cost_t)):
        raise ValueError("non-finite transport costs")
    assign = _assign_sinks(cost_t, counts)
    return float(cost_t[np.arange(n_sinks), assign].sum() / n_sinks)
