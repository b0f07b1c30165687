import numpy as np
import pytest

import hop
from hop import (
    MvskObjective,
    SizeError,
    estimate_comoments,
    np_portfolio_gradients,
    np_portfolio_hessians,
    np_portfolio_moments,
    sample_returns,
)
from hop.nonparam import ReturnsMatrix
from conftest import fd_gradient, fd_hessian, interior_point, make_params, rel_err


def _naive_tensors(x):
    """Reference sample co-moments by explicit loops (1/T scaling)."""
    t, n = x.shape
    mean = x.mean(axis=0)
    xc = x - mean
    cov = np.zeros((n, n))
    coskew = np.zeros((n, n, n))
    cokurt = np.zeros((n, n, n, n))
    for r in range(t):
        d = xc[r]
        for i in range(n):
            for j in range(n):
                cov[i, j] += d[i] * d[j]
                for k in range(n):
                    coskew[i, j, k] += d[i] * d[j] * d[k]
                    for l in range(n):
                        cokurt[i, j, k, l] += d[i] * d[j] * d[k] * d[l]
    return mean, cov / t, coskew / t, cokurt / t


def _sample_data(rng, t=40, n=3):
    params = make_params(n, rng)
    return sample_returns(params, t, seed=int(rng.integers(2**31))).data


class TestEstimation:
    def test_matches_naive_loops(self, rng):
        x = _sample_data(rng, t=30, n=3)
        tensors = estimate_comoments(ReturnsMatrix(x))
        mean, cov, coskew, cokurt = _naive_tensors(x)
        assert rel_err(tensors.mean, mean) < 1e-12
        assert rel_err(tensors.cov, cov) < 1e-12
        assert rel_err(tensors.coskew.reshape(3, 3, 3), coskew) < 1e-12
        assert rel_err(tensors.cokurt.reshape(3, 3, 3, 3), cokurt) < 1e-12

    def test_hand_oracle_two_assets(self):
        # three observations, worked by hand
        x = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
        tensors = estimate_comoments(ReturnsMatrix(x))
        assert np.allclose(tensors.mean, [1.0, 1.0])
        # centered rows: (0,-1), (-1,0), (1,1)
        cov = np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0
        assert np.allclose(tensors.cov, cov)
        # third moment of the equal-weight portfolio: y = (0.5, 0.5, 2),
        # centered (-0.5, -0.5, 1), third moments (-0.125-0.125+1)/3 = 0.25
        m = np_portfolio_moments(np.array([0.5, 0.5]), tensors)
        assert m.phi1 == pytest.approx(1.0)
        assert m.phi2 == pytest.approx(0.5)
        assert m.phi3 == pytest.approx(0.25)
        assert m.phi4 == pytest.approx((0.0625 + 0.0625 + 1.0) / 3.0)

    def test_portfolio_moments_match_scalar_series(self, rng):
        x = _sample_data(rng, t=60, n=4)
        tensors = estimate_comoments(ReturnsMatrix(x))
        for _ in range(5):
            w = interior_point(4, rng)
            y = x @ w
            yc = y - y.mean()
            m = np_portfolio_moments(w, tensors)
            assert m.phi1 == pytest.approx(y.mean(), rel=1e-10)
            assert m.phi2 == pytest.approx(np.mean(yc**2), rel=1e-10)
            assert m.phi3 == pytest.approx(np.mean(yc**3), rel=1e-8, abs=1e-14)
            assert m.phi4 == pytest.approx(np.mean(yc**4), rel=1e-10)

    def test_size_cap(self, rng):
        x = rng.standard_normal((200, 80))
        with pytest.raises(SizeError):
            estimate_comoments(ReturnsMatrix(x))


class TestDerivatives:
    def test_gradients_match_fd(self, rng):
        x = _sample_data(rng, t=50, n=4)
        tensors = estimate_comoments(ReturnsMatrix(x))
        w = interior_point(4, rng)
        grads = np_portfolio_gradients(w, tensors)
        for k, g in enumerate(grads):
            fk = lambda v: getattr(np_portfolio_moments(v, tensors), f"phi{k+1}")
            assert rel_err(g, fd_gradient(fk, w)) < 1e-5, f"phi{k+1}"

    def test_hessians_match_fd(self, rng):
        x = _sample_data(rng, t=50, n=4)
        tensors = estimate_comoments(ReturnsMatrix(x))
        w = interior_point(4, rng)
        h3, h4 = np_portfolio_hessians(w, tensors)
        fd3 = fd_hessian(lambda v: np_portfolio_gradients(v, tensors)[2], w)
        fd4 = fd_hessian(lambda v: np_portfolio_gradients(v, tensors)[3], w)
        assert rel_err(h3, fd3) < 1e-4
        assert rel_err(h4, fd4) < 1e-4

    def test_objective_value_and_gradient(self, rng):
        x = _sample_data(rng, t=50, n=4)
        tensors = estimate_comoments(ReturnsMatrix(x))
        obj = MvskObjective((1.0, 2.0, 3.0, 4.0), tensors=tensors)
        w = interior_point(4, rng)
        v, g = obj.value_and_gradient(w)
        assert v == pytest.approx(obj.value(w))
        assert rel_err(g, fd_gradient(obj.value, w)) < 1e-5
