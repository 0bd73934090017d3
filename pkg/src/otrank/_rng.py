"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
(seed, packed stream id), so parallel or reordered execution of replications
cannot change results.  Stream ids pack a domain tag (data draws vs null
label permutations) with up to two indices; distinct (domain, indices)
tuples never collide.
"""

from __future__ import annotations

import numpy as np

DOMAIN_DATA = 0
DOMAIN_LABELS = 1

_MASK64 = (1 << 64) - 1


def substream(seed: int, domain: int, index: int = 0, rep: int = 0) -> np.random.Generator:
    """Independent generator for one (domain, index, replication) cell."""
    if not 0 <= rep < 1 << 40:
        raise ValueError(f"replication index out of range: {rep}")
    if not 0 <= index < 1 << 16:
        raise ValueError(f"stream index out of range: {index}")
    word = (domain << 56) | (index << 40) | rep
    key = np.array([seed & _MASK64, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws strictly inside (0, 1), safe for quantile transforms."""
    return (rng.integers(0, 1 << 53, size=size) + 0.5) * 2.0**-53
