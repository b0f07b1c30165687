import numpy as np
import pytest


def make_params(n, rng, nu=None, mu_scale=0.1, gamma_scale=0.1):
    """Random well-conditioned parameter set for tests."""
    from hop import GhMstParams

    mu = rng.uniform(-mu_scale, mu_scale, n)
    gamma = rng.uniform(-gamma_scale, gamma_scale, n)
    a = rng.standard_normal((n, n))
    sigma = a @ a.T / n + 0.1 * np.eye(n)
    sigma = 0.5 * (sigma + sigma.T)
    if nu is None:
        nu = rng.uniform(9.0, 20.0)
    return GhMstParams(mu, sigma, gamma, nu)


def interior_point(n, rng):
    """Random point strictly inside the simplex."""
    w = rng.dirichlet(np.ones(n) * 3.0)
    w = 0.9 * w + 0.1 / n
    return w / w.sum()


def fd_gradient(f, w, h=1e-6):
    """Central-difference gradient."""
    w = np.asarray(w, dtype=float)
    g = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2.0 * h)
    return g


def fd_hessian(grad, w, h=1e-6):
    """Central-difference Hessian from a gradient callable."""
    w = np.asarray(w, dtype=float)
    n = w.size
    hess = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        hess[:, i] = (grad(w + e) - grad(w - e)) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = max(np.max(np.abs(b)), 1e-12)
    return np.max(np.abs(a - b)) / denom


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
