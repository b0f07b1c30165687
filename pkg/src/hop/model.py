"""Parametric skew-t return model.

Holds the parameter set Theta = {mu, Sigma, gamma, nu} of the generalized
hyperbolic skew-t distribution and provides closed-form portfolio moments,
their gradients and Hessians, co-moment tensor reconstruction, the
log-density, and a hierarchical sampler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .bessel import log_kv
from .exceptions import DomainError, NumericalError, SizeError

# gamma vectors below this Euclidean norm are treated as exactly zero:
# the Bessel-argument form of the density degenerates there and the
# distribution reduces to a symmetric multivariate Student-t
_GAMMA_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class MomentCoefficients:
    """Scalar coefficients a1..a43, functions of the degrees of freedom only.

    In partial mode a coefficient whose moment-order threshold is not met
    is NaN.  Thresholds: nu > 2 for a1; nu > 4 for a21, a22; nu > 6 for
    a31, a32; nu > 8 for a41, a42, a43.
    """

    a1: float
    a21: float
    a22: float
    a31: float
    a32: float
    a41: float
    a42: float
    a43: float


def moment_coefficients(nu: float, partial: bool = False) -> MomentCoefficients:
    """Closed-form moment coefficients for a given degrees of freedom.

    Requires nu > 8 for the full set.  With ``partial=True`` the
    coefficients whose thresholds nu does not satisfy come back as NaN
    instead of raising.
    """
    nu = float(nu)
    if not np.isfinite(nu) or nu <= 2.0:
        raise DomainError(f"no finite moments exist for nu={nu} (need nu > 2)")
    if not partial and nu <= 8.0:
        raise DomainError(
            f"nu={nu} too small for fourth moments (need nu > 8); "
            "use partial=True for the coefficients that do exist"
        )
    nan = float("nan")
    a1 = nu / (nu - 2.0)
    a21 = a1
    a22 = 2.0 * nu**2 / ((nu - 2.0) ** 2 * (nu - 4.0)) if nu > 4.0 else nan
    if nu > 6.0:
        a31 = 16.0 * nu**3 / ((nu - 2.0) ** 3 * (nu - 4.0) * (nu - 6.0))
        a32 = 6.0 * nu**2 / ((nu - 2.0) ** 2 * (nu - 4.0))
    else:
        a31 = a32 = nan
    if nu > 8.0:
        a41 = (12.0 * nu + 120.0) * nu**4 / (
            (nu - 2.0) ** 4 * (nu - 4.0) * (nu - 6.0) * (nu - 8.0)
        )
        a42 = 6.0 * (2.0 * nu + 4.0) * nu**3 / (
            (nu - 2.0) ** 3 * (nu - 4.0) * (nu - 6.0)
        )
        a43 = 3.0 * nu**2 / ((nu - 2.0) * (nu - 4.0))
    else:
        a41 = a42 = a43 = nan
    return MomentCoefficients(a1, a21, a22, a31, a32, a41, a42, a43)


class GhMstParams:
    """Immutable parameter set of the skew-t model.

    Sigma must be symmetric (exactly, as stored) and positive definite;
    the Cholesky factor is computed once and cached for all quadratic
    forms.  Operations enforce the nu threshold they individually need.
    """

    __slots__ = ("mu", "sigma", "gamma", "nu", "_chol", "_log_det")

    def __init__(self, mu, sigma, gamma, nu):
        mu = np.array(mu, dtype=float)
        sigma = np.array(sigma, dtype=float)
        gamma = np.array(gamma, dtype=float)
        nu = float(nu)
        n = mu.shape[0]
        if mu.ndim != 1 or gamma.shape != (n,) or sigma.shape != (n, n):
            raise DomainError("inconsistent parameter shapes")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))
                and np.all(np.isfinite(gamma)) and np.isfinite(nu)):
            raise DomainError("parameters must be finite")
        if nu <= 0.0:
            raise DomainError("nu must be positive")
        if not np.array_equal(sigma, sigma.T):
            raise DomainError("sigma must be symmetric as stored")
        try:
            chol = linalg.cholesky(sigma, lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalError("sigma is not positive definite") from exc
        for arr in (mu, sigma, gamma):
            arr.setflags(write=False)
        self.mu = mu
        self.sigma = sigma
        self.gamma = gamma
        self.nu = nu
        self._chol = chol
        self._log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor of sigma (cached)."""
        return self._chol

    @property
    def log_det_sigma(self) -> float:
        return self._log_det

    def require_nu(self, threshold: float, what: str) -> None:
        if self.nu <= threshold:
            raise DomainError(
                f"{what} requires nu > {threshold}, got nu={self.nu}"
            )

    def solve_sigma(self, rhs: np.ndarray) -> np.ndarray:
        """sigma^{-1} @ rhs via the cached Cholesky factor."""
        y = linalg.solve_triangular(self._chol, rhs, lower=True)
        return linalg.solve_triangular(self._chol.T, y, lower=False)

    def __repr__(self):
        return f"GhMstParams(n={self.n_assets}, nu={self.nu:g})"


@dataclass(frozen=True)
class PortfolioMoments:
    """First four central moments of the scalar portfolio return w'r."""

    phi1: float
    phi2: float
    phi3: float
    phi4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi1, self.phi2, self.phi3, self.phi4])


def mean_and_covariance(params: GhMstParams):
    """Mean vector and covariance matrix of the return vector:
    mean = mu + a1*gamma, cov = a21*Sigma + a22*gamma gamma'."""
    params.require_nu(4.0, "mean_and_covariance")
    c = moment_coefficients(params.nu, partial=True)
    mean = params.mu + c.a1 * params.gamma
    cov = c.a21 * params.sigma + c.a22 * np.outer(params.gamma, params.gamma)
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def portfolio_moments(w, params: GhMstParams) -> PortfolioMoments:
    """Closed-form phi1..phi4 of w'r in O(N^2) (one Sigma@w product)."""
    params.require_nu(8.0, "portfolio_moments")
    c = moment_coefficients(params.nu)
    w = np.asarray(w, dtype=float)
    s = float(w @ params.gamma)
    q = float(w @ (params.sigma @ w))
    phi1 = float(w @ params.mu) + c.a1 * s
    phi2 = c.a21 * q + c.a22 * s * s
    phi3 = c.a31 * s**3 + c.a32 * s * q
    phi4 = c.a41 * s**4 + c.a42 * s * s * q + c.a43 * q * q
    return PortfolioMoments(phi1, phi2, phi3, phi4)


def portfolio_gradients(w, params: GhMstParams):
    """Gradients of phi1..phi4 with respect to w, each O(N^2)."""
    params.require_nu(8.0, "portfolio_gradients")
    c = moment_coefficients(params.nu)
    w = np.asarray(w, dtype=float)
    gam = params.gamma
    z = params.sigma @ w
    s = float(w @ gam)
    q = float(w @ z)
    g1 = params.mu + c.a1 * gam
    g2 = 2.0 * c.a21 * z + 2.0 * c.a22 * s * gam
    g3 = 3.0 * c.a31 * s * s * gam + c.a32 * (q * gam + 2.0 * s * z)
    g4 = (
        4.0 * c.a41 * s**3 * gam
        + 2.0 * c.a42 * (s * q * gam + s * s * z)
        + 4.0 * c.a43 * q * z
    )
    return g1, g2, g3, g4


def portfolio_hessians(w, params: GhMstParams):
    """Hessians of phi3 and phi4: symmetric N x N matrices assembled from
    rank-one pieces plus scaled Sigma (no N^3 tensor work).

    The published display of the phi4 Hessian drops an operator between
    two middle terms; the symmetrized sum below is validated against
    finite differences of the gradients.
    """
    params.require_nu(8.0, "portfolio_hessians")
    c = moment_coefficients(params.nu)
    w = np.asarray(w, dtype=float)
    gam = params.gamma
    z = params.sigma @ w
    s = float(w @ gam)
    q = float(w @ z)
    gg = np.outer(gam, gam)
    gz = np.outer(gam, z)
    cross = gz + gz.T
    h3 = 6.0 * c.a31 * s * gg + 2.0 * c.a32 * (cross + s * params.sigma)
    h4 = (
        12.0 * c.a41 * s * s * gg
        + 2.0 * c.a42 * (q * gg + 2.0 * s * cross + s * s * params.sigma)
        + 4.0 * c.a43 * (2.0 * np.outer(z, z) + q * params.sigma)
    )
    h3 = 0.5 * (h3 + h3.T)
    h4 = 0.5 * (h4 + h4.T)
    return h3, h4


def reconstruct_comoments(params: GhMstParams, max_n: int = 32):
    """Dense co-moment tensors implied by the parameter set.

    Entry-wise: Phi_{ijk} = a31 g_i g_j g_k
                          + (a32/3)(g_i S_jk + g_j S_ik + g_k S_ij),
    and the analogous 4-index formula for Psi.  Returns a
    :class:`hop.nonparam.CoMomentTensors` with the Kronecker-product
    N x N^2 and N x N^3 flattenings.
    """
    from .nonparam import CoMomentTensors

    n = params.n_assets
    if n > max_n:
        raise SizeError(f"N={n} exceeds reconstruction cap {max_n}")
    params.require_nu(8.0, "reconstruct_comoments")
    c = moment_coefficients(params.nu)
    gam = params.gamma
    sig = params.sigma

    mean = params.mu + c.a1 * gam
    cov = c.a21 * sig + c.a22 * np.outer(gam, gam)
    cov = 0.5 * (cov + cov.T)

    g3 = np.einsum("i,j,k->ijk", gam, gam, gam)
    gs3 = (
        np.einsum("i,jk->ijk", gam, sig)
        + np.einsum("j,ik->ijk", gam, sig)
        + np.einsum("k,ij->ijk", gam, sig)
    )
    coskew3 = c.a31 * g3 + (c.a32 / 3.0) * gs3

    g4 = np.einsum("i,j,k,l->ijkl", gam, gam, gam, gam)
    sg4 = (
        np.einsum("ij,k,l->ijkl", sig, gam, gam)
        + np.einsum("ik,j,l->ijkl", sig, gam, gam)
        + np.einsum("il,j,k->ijkl", sig, gam, gam)
        + np.einsum("jk,i,l->ijkl", sig, gam, gam)
        + np.einsum("jl,i,k->ijkl", sig, gam, gam)
        + np.einsum("kl,i,j->ijkl", sig, gam, gam)
    )
    ss4 = (
        np.einsum("ij,kl->ijkl", sig, sig)
        + np.einsum("ik,jl->ijkl", sig, sig)
        + np.einsum("il,jk->ijkl", sig, sig)
    )
    cokurt4 = c.a41 * g4 + (c.a42 / 6.0) * sg4 + (c.a43 / 3.0) * ss4

    return CoMomentTensors(
        mean=mean,
        cov=cov,
        coskew=coskew3.reshape(n, n * n),
        cokurt=cokurt4.reshape(n, n * n * n),
        n_assets=n,
    )


def _student_t_log_pdf(x, params: GhMstParams) -> np.ndarray:
    """Multivariate Student-t log-density (the gamma -> 0 limit)."""
    n = params.n_assets
    nu = params.nu
    diff = np.atleast_2d(x) - params.mu
    z = linalg.solve_triangular(params.cholesky, diff.T, lower=True)
    q = np.sum(z * z, axis=0)
    out = (
        special.gammaln((nu + n) / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * n * np.log(nu * np.pi)
        - 0.5 * params.log_det_sigma
        - 0.5 * (nu + n) * np.log1p(q / nu)
    )
    return out


def log_pdf(x, params: GhMstParams):
    """Log-density of the skew-t model, evaluated in log space throughout.

    Accepts a single point (N,) or a stack of points (T, N); returns a
    float or a (T,) array accordingly.  For ||gamma|| below 1e-12 the
    Bessel-argument form is singular and the known symmetric Student-t
    limit is used instead.

    The published density mixes a "chi" symbol into one factor; both the
    power term and the Bessel argument use nu + Q(x) here, consistent
    with the standard generalized hyperbolic skew-t form.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != params.n_assets:
        raise DomainError("point dimension does not match parameters")
    if not np.all(np.isfinite(pts)):
        raise DomainError("points must be finite")
    n = params.n_assets
    nu = params.nu
    gam = params.gamma
    if float(np.linalg.norm(gam)) < _GAMMA_ZERO_TOL:
        out = _student_t_log_pdf(pts, params)
        return float(out[0]) if single else out

    diff = pts - params.mu
    z = linalg.solve_triangular(params.cholesky, diff.T, lower=True)
    q = np.sum(z * z, axis=0)
    sig_inv_gam = params.solve_sigma(gam)
    b = float(gam @ sig_inv_gam)  # gamma' Sigma^{-1} gamma > 0 here
    lin = diff @ sig_inv_gam
    order = (nu + n) / 2.0
    arg = np.sqrt((nu + q) * b)
    out = (
        lin
        - 0.5 * n * np.log(2.0 * np.pi)
        - 0.5 * params.log_det_sigma
        + np.log(2.0)
        + 0.5 * nu * np.log(nu / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * order * np.log((nu + q) / b)
        + log_kv(order, arg)
    )
    return float(out[0]) if single else out


def sample_returns(params: GhMstParams, count: int, seed=None):
    """Draw returns via the hierarchical representation:
    tau ~ Gamma(nu/2, rate nu/2), then x | tau ~ N(mu + gamma/tau, Sigma/tau).

    Deterministic given the seed.  Returns a
    :class:`hop.nonparam.ReturnsMatrix` with (count, N) data.
    """
    from .nonparam import ReturnsMatrix

    if count < 0:
        raise DomainError("count must be non-negative")
    rng = np.random.default_rng(seed)
    n = params.n_assets
    tau = rng.gamma(shape=params.nu / 2.0, scale=2.0 / params.nu, size=count)
    normal = rng.standard_normal((count, n)) @ params.cholesky.T
    data = (
        params.mu
        + params.gamma / tau[:, None]
        + normal / np.sqrt(tau)[:, None]
    )
    return ReturnsMatrix(data=data, validate=count >= 2)


def params_to_dict(params: GhMstParams) -> dict:
    """JSON-ready dictionary form (matrices row-major)."""
    return {
        "mu": params.mu.tolist(),
        "sigma": params.sigma.tolist(),
        "gamma": params.gamma.tolist(),
        "nu": params.nu,
    }


def params_from_dict(doc: dict) -> GhMstParams:
    try:
        return GhMstParams(doc["mu"], doc["sigma"], doc["gamma"], doc["nu"])
    except KeyError as exc:
        raise DomainError(f"missing parameter field: {exc}") from exc
