"""Exception hierarchy shared by all solver modules."""

from __future__ import annotations


class KappaFPError(Exception):
    """Base class for all package errors."""


class DomainError(KappaFPError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class DivergentMomentError(DomainError):
    """Requested moment of a heavy-tailed distribution is infinite."""


class ConfigurationError(KappaFPError, ValueError):
    """Invalid combination of scheme parameters."""


class GridError(KappaFPError, ValueError):
    """Degenerate or malformed velocity grid."""


class ShapeError(KappaFPError, ValueError):
    """Two grid functions live on incompatible grids."""


class AccuracyError(KappaFPError, ArithmeticError):
    """Quadrature did not reach the requested tolerance.

    Attributes
    ----------
    estimate : float
        Achieved absolute error estimate (largest component).
    """

    def __init__(self, message: str, estimate: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate


class BreakdownError(KappaFPError, ArithmeticError):
    """Loss of positivity in an orthogonal-polynomial recursion.

    Attributes
    ----------
    index : int
        First index k at which sigma_{k,k} was not positive and finite.
    max_usable_N : int
        Largest truncation order that can still be built.
    """

    def __init__(self, index: int):
        super().__init__(
            f"recursion breakdown at k={index}: sigma_kk is not positive; "
            f"largest usable N is {index - 1}"
        )
        self.index = index
        self.max_usable_N = index - 1


class SolverError(KappaFPError, ArithmeticError):
    """Linear solve failed (zero pivot, non-SPD matrix or residual too large)."""
