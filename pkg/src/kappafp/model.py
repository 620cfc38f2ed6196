"""Equilibria, initial data, grids and error norms shared by every scheme."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, GridError, ShapeError
from .special import _log_norm_const, adaptive_quad, reg_kappa_moment

__all__ = [
    "ModelParams",
    "VelocityGrid",
    "GridFunction",
    "maxwellian",
    "kappa_norm_const",
    "f_kappa",
    "f_kappa_a",
    "two_bump_init",
    "stationary_state",
    "schrodinger_potential",
    "weighted_l2_error",
    "discrete_l2_error",
    "reg_mass",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the Fokker-Planck problem.

    Parameters
    ----------
    kappa : float
        Shape parameter of the kappa equilibrium (kappa > 1/2).
    a : float
        Gaussian cutoff of the regularised equilibrium (a >= 0).
    """

    kappa: float
    a: float = 0.0
    nu: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not (self.kappa > 0.5 and math.isfinite(self.kappa)):
            raise DomainError(f"kappa must be a finite number > 1/2, got {self.kappa}")
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise DomainError(f"a must be >= 0, got {self.a}")

    @property
    def L(self) -> float:
        """Map scale sqrt(2 kappa) of the rational Chebyshev basis."""
        return math.sqrt(2.0 * self.kappa)


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Truncated velocity mesh v_0 < v_1 < ... < v_Nv.

    Cell j (interior node v_j, j = 1..Nv-1) spans [v_{j-1/2}, v_{j+1/2}].
    """

    nodes: np.ndarray

    def __post_init__(self):
        v = np.array(self.nodes, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise GridError("a velocity grid needs at least 3 nodes")
        if not np.all(np.diff(v) > 0.0):
            raise GridError("grid nodes must be strictly increasing (degenerate cell)")
        v.setflags(write=False)
        object.__setattr__(self, "nodes", v)

    @classmethod
    def uniform(cls, v_max: float, N_v: int) -> "VelocityGrid":
        """N_v equal intervals on [-v_max, v_max]."""
        if N_v < 2:
            raise GridError("N_v must be at least 2")
        return cls(np.linspace(-v_max, v_max, int(N_v) + 1))

    @classmethod
    def stretched(cls, v_max: float, N_v: int, ratio: float) -> "VelocityGrid":
        """Symmetric grid whose spacing grows geometrically by ``ratio`` away from 0."""
        if N_v % 2:
            raise GridError("stretched grids need an even number of intervals")
        half = N_v // 2
        w = ratio ** np.arange(half)
        pos = np.concatenate([[0.0], np.cumsum(w)])
        pos *= v_max / pos[-1]
        return cls(np.concatenate([-pos[:0:-1], pos]))

    @property
    def N_v(self) -> int:
        return self.nodes.size - 1

    @property
    def v_max(self) -> float:
        return float(max(-self.nodes[0], self.nodes[-1]))

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def midpoints(self) -> np.ndarray:
        """v_{j+1/2} for j = 0..Nv-1."""
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def cell_lengths(self) -> np.ndarray:
        """Delta v_j = v_{j+1/2} - v_{j-1/2} for interior nodes j = 1..Nv-1."""
        m = self.midpoints
        return m[1:] - m[:-1]

    def same_as(self, other: "VelocityGrid") -> bool:
        return self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of f at the interior nodes; f vanishes at v_0 and v_Nv."""

    grid: VelocityGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.N_v - 1,):
            raise ShapeError(
                f"grid function needs {self.grid.N_v - 1} interior values, got {vals.shape}"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, grid: VelocityGrid, func: Callable) -> "GridFunction":
        return cls(grid, np.asarray(func(grid.interior), dtype=float))

    def full(self) -> np.ndarray:
        """Nodal values including the two zero boundary values."""
        return np.concatenate([[0.0], self.values, [0.0]])


def maxwellian(v):
    """Standard Maxwellian exp(-v^2/2)/sqrt(2 pi)."""
    v = np.asarray(v, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * v * v)


def kappa_norm_const(kappa: float) -> float:
    """c_kappa = Gamma(kappa) / (sqrt(2 pi kappa) Gamma(kappa - 1/2))."""
    if not kappa > 0.5:
        raise DomainError(f"kappa must exceed 1/2, got {kappa}")
    return math.exp(_log_norm_const(kappa))


def _log_fk(v, kappa):
    return _log_norm_const(kappa) - kappa * np.log1p(v * v / (2.0 * kappa))


def f_kappa(v, p: ModelParams):
    """Kappa equilibrium c_kappa (1 + v^2/(2 kappa))^(-kappa)."""
    v = np.asarray(v, dtype=float)
    return np.exp(_log_fk(v, p.kappa))


def f_kappa_a(v, p: ModelParams):
    """Regularised equilibrium f_kappa(v) exp(-a v^2/2) (not renormalised)."""
    v = np.asarray(v, dtype=float)
    return np.exp(_log_fk(v, p.kappa) - 0.5 * p.a * v * v)


def two_bump_init(v, p: ModelParams, u: float = 2.0):
    """Two shifted kappa distributions 0.5 [f_kappa(v+u) + f_kappa(v-u)]."""
    v = np.asarray(v, dtype=float)
    return 0.5 * (np.exp(_log_fk(v + u, p.kappa)) + np.exp(_log_fk(v - u, p.kappa)))


def reg_mass(p: ModelParams) -> float:
    """Total mass of f_{kappa,a}; exactly 1 when a = 0."""
    return 1.0 if p.a == 0.0 else reg_kappa_moment(0, p.kappa, p.a)


def stationary_state(p: ModelParams, mass_in: float) -> Callable:
    """Long-time limit n f_{kappa,a} with n = mass_in / <f_{kappa,a}>.

    Returns
    -------
    callable
        v -> n f_{kappa,a}(v); the constant n is exposed as attribute ``n``.
    """
    n = mass_in / reg_mass(p)

    def f_inf(v):
        return n * f_kappa_a(v, p)

    f_inf.n = n
    return f_inf


def schrodinger_potential(v, p: ModelParams):
    """Confining potential Q_a of the Liouville-transformed operator."""
    v = np.asarray(v, dtype=float)
    r = 1.0 + v * v / (2.0 * p.kappa)
    return 0.25 * v * v * (1.0 / r + p.a) ** 2 - 0.5 * ((1.0 - v * v / (2.0 * p.kappa)) / r**2 + p.a)


def weighted_l2_error(f: Callable, g: Callable, weight: Callable, scale: float = 1.0,
                      rtol: float = 1e-10) -> float:
    """sqrt( int (f - g)^2 weight dv ) by adaptive quadrature."""

    def integrand(v):
        d = f(v) - g(v)
        w = weight(v)
        out = np.zeros_like(v)
        mask = d != 0.0
        out[mask] = d[mask] ** 2 * w[mask]
        return out

    val = adaptive_quad(integrand, scale=scale, rtol=rtol, atol=1e-300)
    return math.sqrt(max(val, 0.0))


def discrete_l2_error(f_ref: GridFunction, f_num: GridFunction) -> float:
    """Discrete L2 distance sqrt( (2 v_max / N_v) sum_j |f_ref - f_num|^2 )."""
    if not f_ref.grid.same_as(f_num.grid):
        raise ShapeError("discrete_l2_error: grid functions live on different grids")
    g = f_ref.grid
    d = f_ref.values - f_num.values
    return math.sqrt(2.0 * g.v_max / g.N_v * float(np.dot(d, d)))
