import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hop import project
from hop.simplex import kkt_multiplier, project_bisection


def _oracle_project(v):
    """Exhaustive support enumeration: try every candidate support,
    solve the equality-constrained problem on it, keep the feasible
    candidate closest to v."""
    v = np.asarray(v, dtype=float)
    n = v.size
    best, best_d = None, np.inf
    for r in range(1, n + 1):
        for support in itertools.combinations(range(n), r):
            idx = list(support)
            lam = (np.sum(v[idx]) - 1.0) / r
            w = np.zeros(n)
            w[idx] = v[idx] - lam
            if np.any(w[idx] < -1e-12):
                continue
            w = np.clip(w, 0.0, None)
            d = np.sum((w - v) ** 2)
            if d < best_d - 1e-15:
                best, best_d = w, d
    return best


def _check_kkt(v, w, tol=1e-9):
    lam = kkt_multiplier(v, w)
    # stationarity + complementary slackness: for active coordinates
    # w_i = v_i - lam, for inactive ones v_i - lam <= 0
    on = w > tol
    assert np.all(np.abs(w[on] - (v[on] - lam)) < tol)
    assert np.all(v[~on] - lam <= tol)
    assert abs(w.sum() - 1.0) < tol
    assert np.all(w >= -tol)


class TestProjectOracle:
    def test_against_support_enumeration(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 7))
            v = rng.uniform(-3.0, 3.0, n)
            w = project(v)
            assert np.linalg.norm(w - _oracle_project(v)) < 1e-10
            _check_kkt(v, w)

    def test_bisection_agrees(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 40))
            v = rng.uniform(-5.0, 5.0, n) * 10.0 ** rng.integers(-3, 3)
            assert np.linalg.norm(project(v) - project_bisection(v)) < 1e-9

    def test_known_cases(self):
        assert np.allclose(project(np.array([0.5, 0.5])), [0.5, 0.5])
        assert np.allclose(project(np.array([2.0, 0.0])), [1.0, 0.0])
        assert np.allclose(project(np.array([-10.0, 0.0, 10.0])), [0.0, 0.0, 1.0])
        assert np.allclose(project(np.array([0.3])), [1.0])


vectors = hnp.arrays(
    np.float64,
    hnp.array_shapes(min_dims=1, max_dims=1, min_side=1, max_side=30),
    elements=st.floats(-1e6, 1e6, allow_nan=False),
)


class TestProjectProperties:
    @given(vectors)
    @settings(max_examples=200, deadline=None)
    def test_feasible(self, v):
        w = project(v)
        assert np.all(w >= 0.0)
        assert abs(w.sum() - 1.0) < 1e-9

    @given(vectors)
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, v):
        w = project(v)
        assert np.linalg.norm(project(w) - w) < 1e-9

    @given(vectors, st.floats(-100.0, 100.0, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_translation_invariant(self, v, c):
        # adding a constant to every coordinate does not change the
        # projection (it only shifts the multiplier)
        assert np.linalg.norm(project(v + c) - project(v)) < 1e-8

    @given(vectors)
    @settings(max_examples=100, deadline=None)
    def test_order_preserving(self, v):
        w = project(v)
        order = np.argsort(v, kind="stable")
        assert np.all(np.diff(w[order]) >= -1e-12)

    @given(vectors)
    @settings(max_examples=100, deadline=None)
    def test_kkt(self, v):
        _check_kkt(v, project(v), tol=1e-7)


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(Exception):
            project(np.array([np.nan, 0.0]))

    def test_rejects_empty(self):
        with pytest.raises(Exception):
            project(np.array([]))
