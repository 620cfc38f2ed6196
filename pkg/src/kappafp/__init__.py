"""Solvers for the 1D energetic Fokker-Planck equation.

    d_t f = d_v [ f_eq d_v (f / f_eq) ]

with Maxwellian, kappa and regularised-kappa equilibria.  Three spectral
schemes (Hermite, rational Chebyshev, Gram-Schmidt polynomials) and a
finite-volume scheme are provided together with an experiment harness.
"""

__version__ = "0.1.0"

from .errors import (AccuracyError, BreakdownError, ConfigurationError, DivergentMomentError,
                     DomainError, GridError, KappaFPError, ShapeError, SolverError)
from .kernels import BACKEND, available_backends
from .model import (GridFunction, ModelParams, VelocityGrid, discrete_l2_error, f_kappa,
                    f_kappa_a, maxwellian, stationary_state, two_bump_init)
from .harness import ErrorReport, RunConfig, run

__all__ = [
    "__version__",
    "AccuracyError",
    "BreakdownError",
    "ConfigurationError",
    "DivergentMomentError",
    "DomainError",
    "GridError",
    "KappaFPError",
    "ShapeError",
    "SolverError",
    "BACKEND",
    "available_backends",
    "GridFunction",
    "ModelParams",
    "VelocityGrid",
    "discrete_l2_error",
    "f_kappa",
    "f_kappa_a",
    "maxwellian",
    "stationary_state",
    "two_bump_init",
    "ErrorReport",
    "RunConfig",
    "run",
]
