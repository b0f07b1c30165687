"""MVSK objective and its solvers.

The problem min_{w in simplex} f(w) = -l1 phi1 + l2 phi2 - l3 phi3 + l4 phi4
is recast as finding a fixed point of the projected-gradient mapping
G(w; eta) = P(w - eta grad f(w)).  The accelerated solver extrapolates
along the residual R = G(w) - w with a squared second-level term and a
negative step length, guarded by a monotone backtracking safeguard; with
acceleration disabled it reduces to plain projected gradient descent
with backtracking.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .exceptions import DegenerateStep, DomainError, LineSearchExhausted
from .model import (GhMstParams, PortfolioMoments, moment_coefficients,
                    portfolio_gradients, portfolio_moments)
from .nonparam import (CoMomentTensors, np_portfolio_gradients,
                       np_portfolio_moments)

RESIDUAL_FLOOR = 1e-15
ETA_FLOOR = 1e-16
V_GUARD = 1e-14


def crra_lambdas(xi: float):
    """Moment weights from the CRRA utility expansion:
    (1, xi/2, xi(xi+1)/6, xi(xi+1)(xi+2)/24)."""
    xi = float(xi)
    if xi < 0.0:
        raise DomainError("xi must be non-negative")
    return (1.0, xi / 2.0, xi * (xi + 1.0) / 6.0,
            xi * (xi + 1.0) * (xi + 2.0) / 24.0)


class MvskObjective:
    """f(w) = -l1 phi1 + l2 phi2 - l3 phi3 + l4 phi4.

    Backed either by a parametric skew-t parameter set (closed-form
    moments, O(N^2) per evaluation) or by dense co-moment tensors
    (oracle mode, O(N^3)/O(N^4) per evaluation).
    """

    def __init__(self, lambdas, params: GhMstParams | None = None,
                 tensors: CoMomentTensors | None = None):
        lambdas = tuple(float(v) for v in lambdas)
        if len(lambdas) != 4 or any(v < 0.0 for v in lambdas):
            raise DomainError("lambdas must be four non-negative reals")
        if not any(v > 0.0 for v in lambdas):
            raise DomainError("at least one lambda must be positive")
        if (params is None) == (tensors is None):
            raise DomainError("provide exactly one of params or tensors")
        self.lambdas = lambdas
        self.params = params
        self.tensors = tensors
        if params is not None:
            params.require_nu(8.0, "MvskObjective")
            self._coeff = moment_coefficients(params.nu)

    @property
    def n_assets(self) -> int:
        if self.params is not None:
            return self.params.n_assets
        return self.tensors.n_assets

    def moments(self, w) -> PortfolioMoments:
        if self.params is not None:
            return portfolio_moments(w, self.params)
        return np_portfolio_moments(w, self.tensors)

    def value(self, w) -> float:
        l1, l2, l3, l4 = self.lambdas
        m = self.moments(w)
        return -l1 * m.phi1 + l2 * m.phi2 - l3 * m.phi3 + l4 * m.phi4

    def gradient(self, w) -> np.ndarray:
        l1, l2, l3, l4 = self.lambdas
        if self.params is not None:
            g1, g2, g3, g4 = portfolio_gradients(w, self.params)
        else:
            g1, g2, g3, g4 = np_portfolio_gradients(w, self.tensors)
        return -l1 * g1 + l2 * g2 - l3 * g3 + l4 * g4

    def value_and_gradient(self, w):
        return self.value(w), self.gradient(w)


@dataclass
class SolverConfig:
    """Step sizes, tolerances and safeguard parameters."""

    eta: float = 5.0        # fixed step of the G mapping
    eta0: float = 5.0       # initial step of the safeguard line search
    beta: float = 0.5       # backtracking factor
    rel_tol: float = 1e-6
    max_iter: int = 5000
    mode: str = "rfpa"      # "rfpa" or "pgd"
    use_fast_kernel: bool = False

    def __post_init__(self):
        if self.eta <= 0.0 or self.eta0 <= 0.0:
            raise DomainError("step sizes must be positive")
        if not 0.0 < self.beta < 1.0:
            raise DomainError("beta must lie in (0, 1)")
        if self.rel_tol <= 0.0:
            raise DomainError("rel_tol must be positive")
        if self.mode not in ("rfpa", "pgd"):
            raise DomainError(f"unknown mode {self.mode!r}")


@dataclass
class StepRecord:
    alpha: float
    accel_accepted: bool
    backtracks: int
    gmap_evals: int
    f_value: float
    residual_norm: float


@dataclass
class SolveReport:
    """Final weights plus the full per-iteration trace of a solve."""

    w_final: np.ndarray
    objective_trace: list[float]
    residual_trace: list[float]
    alpha_trace: list[float]
    accel_accepted: list[bool]
    linesearch_backtracks: list[int]
    gmap_evals: list[int]
    iterations: int
    wall_time: float
    converged: bool
    max_iter_reached: bool
    config: SolverConfig
    extras: dict = field(default_factory=dict)

    @property
    def total_gmap_evals(self) -> int:
        return int(sum(self.gmap_evals))

    def to_dict(self) -> dict:
        return {
            "w_final": np.asarray(self.w_final).tolist(),
            "objective_trace": [float(v) for v in self.objective_trace],
            "residual_trace": [float(v) for v in self.residual_trace],
            "alpha_trace": [float(v) for v in self.alpha_trace],
            "accel_accepted": [bool(v) for v in self.accel_accepted],
            "linesearch_backtracks": [int(v) for v in self.linesearch_backtracks],
            "gmap_evals": [int(v) for v in self.gmap_evals],
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "max_iter_reached": self.max_iter_reached,
            "config": {
                "eta": self.config.eta,
                "eta0": self.config.eta0,
                "beta": self.config.beta,
                "rel_tol": self.config.rel_tol,
                "max_iter": self.config.max_iter,
                "mode": self.config.mode,
            },
            **self.extras,
        }


def g_map(w, eta: float, obj) -> np.ndarray:
    """One projected-gradient step P(w - eta grad f(w))."""
    if eta == 0.0:
        return simplex.project(w)
    return simplex.project(np.asarray(w, dtype=float) - eta * obj.gradient(w))


def residual(w, eta: float, obj) -> np.ndarray:
    """R(w; eta) = G(w; eta) - w; zero exactly at fixed points."""
    return g_map(w, eta, obj) - np.asarray(w, dtype=float)


def second_difference(w, eta: float, obj) -> np.ndarray:
    """V(w; eta) = G(G(w)) - 2 G(w) + w (two G evaluations)."""
    w = np.asarray(w, dtype=float)
    gw = g_map(w, eta, obj)
    ggw = g_map(gw, eta, obj)
    return ggw - 2.0 * gw + w


def step_length(r: np.ndarray, v: np.ndarray) -> float:
    """alpha = max(-||R||/||V||, b), with b = ||R||^2 / <R,V> when
    <R,V> < 0 and -inf otherwise; always negative.

    Raises DegenerateStep when ||V|| is numerically zero relative
    to ||R|| (the ratio would blow up)."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    r_norm = float(np.linalg.norm(r))
    v_norm = float(np.linalg.norm(v))
    if r_norm == 0.0:
        raise DomainError("step_length requires a nonzero residual")
    if v_norm < V_GUARD * max(1.0, r_norm):
        raise DegenerateStep("second difference numerically zero")
    rv = float(r @ v)
    b = r_norm * r_norm / rv if rv < 0.0 else -np.inf
    return max(-r_norm / v_norm, b)


def _line_search(w, f_w, grad_w, obj, cfg: SolverConfig, first_step=None):
    """Safeguarded projected-gradient step with backtracking from eta0.

    first_step, when given, is a precomputed P(w - eta0 * grad_w) (the
    residual step already evaluated it); the first trial reuses it
    instead of projecting again.

    Returns (w_next, f_next, backtracks, gmap_evals)."""
    eta_p = cfg.eta0
    backtracks = 0
    evals = 0
    while True:
        if first_step is not None:
            w_next = first_step
            first_step = None
        else:
            w_next = simplex.project(w - eta_p * grad_w)
            evals += 1
        diff = w_next - w
        if np.all(np.abs(diff) <= 1e-14):
            # backtracking has shrunk the step below machine noise on the
            # simplex: numerically a fixed point, keep the current iterate
            return w, f_w, backtracks, evals
        f_next = obj.value(w_next)
        bound = f_w + float(grad_w @ diff) + float(diff @ diff) / (2.0 * eta_p)
        if f_next <= bound:
            if f_next > f_w:
                # the bound is <= f_w in exact arithmetic, so this is
                # rounding noise at a numerical fixed point
                return w, f_w, backtracks, evals
            return w_next, f_next, backtracks, evals
        eta_p *= cfg.beta
        backtracks += 1
        if eta_p < ETA_FLOOR:
            raise LineSearchExhausted(
                f"line-search step underflowed below {ETA_FLOOR}"
            )


def rfpa_step(w, obj, cfg: SolverConfig, f_w: float | None = None,
              grad_w: np.ndarray | None = None):
    """One accelerated iteration: extrapolated candidate
    P(w - 2 alpha R + alpha^2 V), falling back to the monotone
    safeguard when the candidate does not improve f.

    Returns (w_next, StepRecord); guarantees f(w_next) <= f(w).
    """
    w = np.asarray(w, dtype=float)
    if grad_w is None:
        grad_w = obj.gradient(w)
    if f_w is None:
        f_w = obj.value(w)

    gw = simplex.project(w - cfg.eta * grad_w)
    r = gw - w
    r_norm = float(np.linalg.norm(r))
    if r_norm < RESIDUAL_FLOOR:
        rec = StepRecord(alpha=0.0, accel_accepted=False, backtracks=0,
                         gmap_evals=1, f_value=f_w, residual_norm=r_norm)
        return w, rec

    ggw = simplex.project(gw - cfg.eta * obj.gradient(gw))
    v = ggw - 2.0 * gw + w
    gmap_evals = 2

    alpha = 0.0
    accepted = False
    f_next = f_w
    w_next = w
    try:
        alpha = step_length(r, v)
    except DegenerateStep:
        alpha = np.nan
    if np.isfinite(alpha):
        cand = simplex.project(w - 2.0 * alpha * r + alpha * alpha * v)
        f_cand = obj.value(cand)
        if f_cand <= f_w:
            w_next, f_next, accepted = cand, f_cand, True

    backtracks = 0
    if not accepted:
        first = gw if cfg.eta0 == cfg.eta else None
        w_next, f_next, backtracks, evals = _line_search(
            w, f_w, grad_w, obj, cfg, first_step=first)
        gmap_evals += evals

    rec = StepRecord(alpha=float(alpha) if np.isfinite(alpha) else 0.0,
                     accel_accepted=accepted, backtracks=backtracks,
                     gmap_evals=gmap_evals, f_value=f_next,
                     residual_norm=r_norm)
    return w_next, rec


def pgd_step(w, obj, cfg: SolverConfig, f_w: float | None = None,
             grad_w: np.ndarray | None = None):
    """One plain PGD iteration with the same backtracking safeguard."""
    w = np.asarray(w, dtype=float)
    if grad_w is None:
        grad_w = obj.gradient(w)
    if f_w is None:
        f_w = obj.value(w)
    w_next, f_next, backtracks, evals = _line_search(w, f_w, grad_w, obj, cfg)
    rec = StepRecord(alpha=0.0, accel_accepted=False, backtracks=backtracks,
                     gmap_evals=evals, f_value=f_next,
                     residual_norm=float(np.linalg.norm(w_next - w)))
    return w_next, rec


def _converged(w_old, w_new, f_old, f_new, rel_tol: float) -> bool:
    """Element-wise weight condition plus scalar objective condition.

    The element-wise test carries a 1e-14 absolute floor: components
    pinned at the boundary sit at numerical zero and fluctuate
    multiplicatively (1e-22 scale), so a purely relative test can never
    fire for them even at an exact fixed point.
    """
    if not np.all(np.abs(w_new - w_old)
                  <= rel_tol * (np.abs(w_new) + np.abs(w_old)) + 1e-14):
        return False
    return abs(f_new - f_old) <= rel_tol * (abs(f_new) + abs(f_old))


def solve(w0, obj, cfg: SolverConfig | None = None) -> SolveReport:
    """Iterate accelerated (or plain PGD) steps until both relative
    stopping conditions hold or max_iter is reached.

    Any input vector is projected onto the simplex first.  The returned
    objective trace is non-increasing by construction.
    """
    if cfg is None:
        cfg = SolverConfig()
    if cfg.use_fast_kernel and getattr(obj, "params", None) is not None:
        return _solve_fast(w0, obj, cfg)

    start = time.perf_counter()
    w = simplex.project(np.asarray(w0, dtype=float))
    f_w = obj.value(w)
    step = rfpa_step if cfg.mode == "rfpa" else pgd_step

    objective_trace = [f_w]
    residual_trace: list[float] = []
    alpha_trace: list[float] = []
    accel: list[bool] = []
    backtracks: list[int] = []
    gmap_evals: list[int] = []
    converged = False
    iterations = 0

    # an extrapolated step can satisfy the movement test while still far
    # from a fixed point, so convergence detected on an accepted
    # acceleration is confirmed with a plain safeguard step first
    force_safeguard = False
    for _ in range(cfg.max_iter):
        grad_w = obj.gradient(w)
        this_step = pgd_step if force_safeguard else step
        force_safeguard = False
        w_next, rec = this_step(w, obj, cfg, f_w=f_w, grad_w=grad_w)
        iterations += 1
        objective_trace.append(rec.f_value)
        residual_trace.append(rec.residual_norm)
        alpha_trace.append(rec.alpha)
        accel.append(rec.accel_accepted)
        backtracks.append(rec.backtracks)
        gmap_evals.append(rec.gmap_evals)
        if _converged(w, w_next, f_w, rec.f_value, cfg.rel_tol):
            if rec.accel_accepted:
                force_safeguard = True
            else:
                w, f_w = w_next, rec.f_value
                converged = True
                break
        w, f_w = w_next, rec.f_value

    return SolveReport(
        w_final=w,
        objective_trace=objective_trace,
        residual_trace=residual_trace,
        alpha_trace=alpha_trace,
        accel_accepted=accel,
        linesearch_backtracks=backtracks,
        gmap_evals=gmap_evals,
        iterations=iterations,
        wall_time=time.perf_counter() - start,
        converged=converged,
        max_iter_reached=not converged,
        config=cfg,
    )


def _solve_fast(w0, obj: MvskObjective, cfg: SolverConfig) -> SolveReport:
    """Dispatch the parametric solve to the compiled kernel."""
    from . import kernels

    start = time.perf_counter()
    out = kernels.run_solve(w0, obj, cfg)
    (w, obj_trace, res_trace, alpha_trace, accel, backtracks,
     gmap_evals, iterations, status) = out
    if status == 2:
        raise LineSearchExhausted("line-search step underflowed")
    return SolveReport(
        w_final=w,
        objective_trace=list(obj_trace),
        residual_trace=list(res_trace),
        alpha_trace=list(alpha_trace),
        accel_accepted=[bool(v) for v in accel],
        linesearch_backtracks=[int(v) for v in backtracks],
        gmap_evals=[int(v) for v in gmap_evals],
        iterations=int(iterations),
        wall_time=time.perf_counter() - start,
        converged=status == 0,
        max_iter_reached=status == 1,
        config=cfg,
    )


def stationarity_certificate(w, obj) -> float:
    """min over simplex vertices e_i of (e_i - w)' grad f(w).

    Non-negative (within tolerance) exactly at stationary points of the
    simplex-constrained problem.
    """
    w = np.asarray(w, dtype=float)
    grad = obj.gradient(w)
    return float(np.min(grad) - w @ grad)
