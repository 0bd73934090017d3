"""Normal and chi-square quantile functions.

Thin validated wrappers around SciPy's special functions.  The contract is
the round-trip accuracy (CDF(quantile(p)) = p to 1e-10), not a particular
algorithm; SciPy's ``ndtri`` and ``gammaincinv`` comfortably exceed it.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sps


def inv_cdf_normal(p):
    """Standard normal quantile Phi^{-1}(p).

    Parameters
    ----------
    p : float or array_like
        Probabilities, each strictly inside (0, 1).

    Returns
    -------
    float or ndarray
        Quantiles, same shape as `p`.
    """
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("p must lie strictly inside (0, 1)")
    out = _sps.ndtri(arr)
    return float(out) if arr.ndim == 0 else out


def inv_cdf_chisq(p, df):
    """Chi-square quantile F^{-1}_{chi2_df}(p).

    Parameters
    ----------
    p : float or array_like
        Probabilities, each strictly inside (0, 1).
    df : int
        Degrees of freedom, a positive integer.

    Returns
    -------
    float or ndarray
        Nonnegative quantiles, same shape as `p`.
    """
    if df != int(df) or df < 1:
        raise ValueError(f"df must be a positive integer, got {df!r}")
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("p must lie strictly inside (0, 1)")
    # F_{chi2_df}(x) = P(df/2, x/2), the regularized lower incomplete gamma.
    out = 2.0 * _sps.gammaincinv(df / 2.0, arr)
    return float(out) if arr.ndim == 0 else out
