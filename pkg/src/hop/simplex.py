"""Exact Euclidean projection onto the unit simplex {w : 1'w = 1, w >= 0}.

Default algorithm is the sort-based closed form (O(N log N), exact in
finitely many operations): sort v descending, find the largest support
size k with v_(k) strictly above the running threshold, and clip.  The
monotone scalar equation zeta(gamma) = 0 from the KKT system is kept as
a bisection cross-check mode.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DataError

_CLEANUP_FLOOR = -1e-15


def project(v) -> np.ndarray:
    """argmin_{w in simplex} ||w - v||^2, via the sort-based water level.

    Output is cleaned up to be feasible to machine precision: tiny
    negatives are clamped and the vector is renormalized by its exact sum.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DataError("project expects a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise DataError("project expects finite input")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    # strictly-greater test: entries exactly at the threshold are zeroed
    support = u - css / ks > 0.0
    k = int(np.nonzero(support)[0][-1]) + 1
    gamma = css[k - 1] / k
    w = v - gamma
    np.clip(w, 0.0, None, out=w)
    small = (w < 0.0) & (w >= _CLEANUP_FLOOR)
    w[small] = 0.0
    total = w.sum()
    if total > 0.0:
        w /= total
    return w


def zeta(gamma: float, v) -> float:
    """sum_i max(0, v_i - gamma) - 1; continuous, non-increasing in gamma."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DataError("zeta expects finite input")
    return float(np.sum(np.maximum(0.0, v - gamma)) - 1.0)


def project_bisection(v, tol: float = 1e-14, max_iter: int = 200) -> np.ndarray:
    """Projection via bisection on zeta; cross-check mode for the
    sort-based closed form."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DataError("project expects finite input")
    lo = float(np.min(v)) - 1.0 / v.size - 1.0
    hi = float(np.max(v))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = zeta(mid, v)
        if abs(val) <= tol:
            break
        if val > 0.0:
            lo = mid
        else:
            hi = mid
    else:
        mid = 0.5 * (lo + hi)
    w = np.maximum(0.0, v - mid)
    total = w.sum()
    if total > 0.0:
        w /= total
    return w


def kkt_multiplier(v, w) -> float:
    """Recover the KKT threshold gamma from a projection certificate:
    on the support, w_i = v_i - gamma."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    on = w > 0.0
    return float(np.mean(v[on] - w[on]))
