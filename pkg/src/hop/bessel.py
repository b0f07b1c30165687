"""Log-scale modified Bessel function of the second kind.

The skew-t density multiplies K_lambda(x) by factors that individually
under/overflow in double precision, so K is only ever evaluated in log
space here.  The workhorse is the exponentially scaled ``scipy.special.kve``
(log kve(v, x) - x is exact log K without forming K itself); for the rare
large-order/small-argument corner where even kve overflows a double, we
fall back to arbitrary-precision evaluation.
"""

from __future__ import annotations

import numpy as np
from scipy import special


def _log_kv_mpmath(order: float, x: float) -> float:
    import mpmath

    with mpmath.workdps(30):
        return float(mpmath.log(mpmath.besselk(order, x)))


def log_kv(order, x):
    """log K_order(x) for x > 0, elementwise.

    Accepts scalars or arrays (broadcast together).  K is symmetric in the
    order, K_{-v} = K_v.
    """
    order = np.abs(np.asarray(order, dtype=float))
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("log_kv requires x > 0")
    order, x = np.broadcast_arrays(order, x)
    with np.errstate(over="ignore"):
        scaled = special.kve(order, x)
    out = np.where(np.isfinite(scaled) & (scaled > 0.0),
                   np.log(np.where(scaled > 0.0, scaled, 1.0)) - x,
                   np.inf)
    bad = ~np.isfinite(out)
    if np.any(bad):
        flat = out.ravel()
        for idx in np.flatnonzero(bad.ravel()):
            flat[idx] = _log_kv_mpmath(order.ravel()[idx], x.ravel()[idx])
        out = flat.reshape(out.shape)
    if out.ndim == 0:
        return float(out)
    return out


def log_kv_ratio(order_num, order_den, x):
    """log( K_{order_num}(x) / K_{order_den}(x) ), elementwise."""
    return log_kv(order_num, x) - log_kv(order_den, x)
