"""MVSK portfolio design under a generalized hyperbolic skew-t model.

Library layout:

- model: skew-t parameter set, closed-form portfolio moments and
  derivatives, density, sampler
- nonparam: sample co-moment tensors and Kronecker-form moments
- simplex: exact Euclidean projection onto the unit simplex
- solver: accelerated projected-gradient MVSK solver
- tilting: smoothed multi-objective portfolio tilting
- fitting: EM maximum likelihood for the return model
- experiments, cli: synthetic studies and the command-line front end
"""

__version__ = "0.1.0"

from .data_io import (load_params, read_returns_csv, save_params,
                      write_returns_csv)
from .exceptions import (DataError, DegenerateStep, DomainError, HopError,
                         IllPosedError, LineSearchExhausted, NonMonotoneError,
                         NumericalError, ShiftViolation, SizeError)
from .fitting import FitConfig, FitReport, fit, normalized_loglik
from .model import (GhMstParams, MomentCoefficients, PortfolioMoments,
                    log_pdf, mean_and_covariance, moment_coefficients,
                    params_from_dict, params_to_dict, portfolio_gradients,
                    portfolio_hessians, portfolio_moments,
                    reconstruct_comoments, sample_returns)
from .nonparam import (CoMomentTensors, ReturnsMatrix, estimate_comoments,
                       np_portfolio_gradients, np_portfolio_hessians,
                       np_portfolio_moments)
from .simplex import project
from .solver import (MvskObjective, SolveReport, SolverConfig, crra_lambdas,
                     solve, stationarity_certificate)
from .tilting import TiltingObjective, TiltingSpec, solve_tilting

__all__ = [
    "__version__",
    "HopError", "DomainError", "SizeError", "DataError", "NumericalError",
    "DegenerateStep", "LineSearchExhausted", "IllPosedError",
    "ShiftViolation", "NonMonotoneError",
    "GhMstParams", "MomentCoefficients", "PortfolioMoments",
    "moment_coefficients", "mean_and_covariance", "portfolio_moments",
    "portfolio_gradients", "portfolio_hessians", "reconstruct_comoments",
    "log_pdf", "sample_returns", "params_to_dict", "params_from_dict",
    "read_returns_csv", "write_returns_csv", "load_params", "save_params",
    "ReturnsMatrix", "CoMomentTensors", "estimate_comoments",
    "np_portfolio_moments", "np_portfolio_gradients",
    "np_portfolio_hessians",
    "project",
    "MvskObjective", "SolverConfig", "SolveReport", "crra_lambdas",
    "solve", "stationarity_certificate",
    "TiltingSpec", "TiltingObjective", "solve_tilting",
    "FitConfig", "FitReport", "fit", "normalized_loglik",
]
