"""Sample (non-parametric) co-moment estimation and Kronecker evaluation.

Tensors are stored dense, flattened row-major in the convention
Phi[i, (j-1)N + k] (1-based), so the textbook Kronecker formulas
w'Phi(w (x) w) etc. are literal matrix products.  This path is the
brute-force oracle and the baseline for the estimation-error experiment;
construction refuses dimensions above a cap because memory grows as N^4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, DomainError, SizeError
from .model import PortfolioMoments

DEFAULT_TENSOR_CAP = 64
HESSIAN_CAP = 16


@dataclass(frozen=True)
class ReturnsMatrix:
    """T x N matrix of per-period log-returns with optional asset labels."""

    data: np.ndarray
    asset_names: list[str] | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise DataError("returns must be a 2-D (T, N) array")
        if self.validate:
            if data.shape[0] < 2:
                raise DataError("need at least T=2 observations")
            if not np.all(np.isfinite(data)):
                raise DataError("returns contain non-finite entries")
        if self.asset_names is not None and len(self.asset_names) != data.shape[1]:
            raise DataError("asset_names length does not match column count")
        object.__setattr__(self, "data", data)

    @property
    def n_periods(self) -> int:
        return self.data.shape[0]

    @property
    def n_assets(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class CoMomentTensors:
    """Mean, covariance, co-skewness (N x N^2) and co-kurtosis (N x N^3)."""

    mean: np.ndarray
    cov: np.ndarray
    coskew: np.ndarray
    cokurt: np.ndarray
    n_assets: int

    def __post_init__(self):
        n = self.n_assets
        if self.mean.shape != (n,) or self.cov.shape != (n, n):
            raise DataError("mean/cov shape mismatch")
        if self.coskew.shape != (n, n * n) or self.cokurt.shape != (n, n**3):
            raise DataError("tensor shape mismatch")


def estimate_comoments(returns: ReturnsMatrix, cap: int = DEFAULT_TENSOR_CAP,
                       block: int = 256) -> CoMomentTensors:
    """Plain-average sample co-moments of centered returns (divisor T).

    Accumulates outer products over observation blocks in a fixed order,
    so the result is deterministic regardless of T.
    """
    data = returns.data
    t, n = data.shape
    if n > cap:
        raise SizeError(f"N={n} exceeds tensor cap {cap}")
    if t < 2:
        raise DataError("need at least T=2 observations")
    if not np.all(np.isfinite(data)):
        raise DataError("returns contain non-finite entries")

    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / t
    cov = 0.5 * (cov + cov.T)

    coskew = np.zeros((n, n * n))
    cokurt = np.zeros((n, n**3))
    for start in range(0, t, block):
        chunk = centered[start:start + block]
        # rows of kron(c, c) and kron(c, c, c), one per observation
        kr2 = (chunk[:, :, None] * chunk[:, None, :]).reshape(chunk.shape[0], -1)
        coskew += chunk.T @ kr2
        # kron(c, c, c) ordering: flat index (j-1)N^2 + (k-1)N + l
        kr3 = (kr2[:, :, None] * chunk[:, None, :]).reshape(chunk.shape[0], -1)
        cokurt += chunk.T @ kr3
    coskew /= t
    cokurt /= t
    return CoMomentTensors(mean=mean, cov=cov, coskew=coskew, cokurt=cokurt,
                           n_assets=n)


def _check_dim(w: np.ndarray, tensors: CoMomentTensors) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (tensors.n_assets,):
        raise DomainError(
            f"weights length {w.shape} does not match N={tensors.n_assets}"
        )
    return w


def np_portfolio_moments(w, tensors: CoMomentTensors) -> PortfolioMoments:
    """phi1 = w'mean, phi2 = w'Cov w, phi3 = w'Phi(w(x)w),
    phi4 = w'Psi(w(x)w(x)w)."""
    w = _check_dim(w, tensors)
    ww = np.kron(w, w)
    www = np.kron(ww, w)
    phi1 = float(w @ tensors.mean)
    phi2 = float(w @ tensors.cov @ w)
    phi3 = float(w @ (tensors.coskew @ ww))
    phi4 = float(w @ (tensors.cokurt @ www))
    return PortfolioMoments(phi1, phi2, phi3, phi4)


def np_portfolio_gradients(w, tensors: CoMomentTensors):
    """Gradients per the Kronecker formulas: mean, 2 Cov w,
    3 Phi(w(x)w), 4 Psi(w(x)w(x)w)."""
    w = _check_dim(w, tensors)
    ww = np.kron(w, w)
    www = np.kron(ww, w)
    g1 = tensors.mean.copy()
    g2 = 2.0 * (tensors.cov @ w)
    g3 = 3.0 * (tensors.coskew @ ww)
    g4 = 4.0 * (tensors.cokurt @ www)
    return g1, g2, g3, g4


def np_portfolio_hessians(w, tensors: CoMomentTensors):
    """Hessians 6 Phi(I (x) w) and 12 Psi(I (x) w (x) w).

    Validation-only path: refuses N above a small cap; not used by any
    solver.
    """
    w = _check_dim(w, tensors)
    n = tensors.n_assets
    if n > HESSIAN_CAP:
        raise SizeError(f"N={n} exceeds Hessian cap {HESSIAN_CAP}")
    eye = np.eye(n)
    iw = np.kron(eye, w.reshape(n, 1))          # N^2 x N
    iww = np.kron(eye, np.kron(w, w).reshape(n * n, 1))  # N^3 x N
    h3 = 6.0 * (tensors.coskew @ iw)
    h4 = 12.0 * (tensors.cokurt @ iww)
    return 0.5 * (h3 + h3.T), 0.5 * (h4 + h4.T)
