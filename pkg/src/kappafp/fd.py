"""Finite-volume scheme on a truncated velocity interval.

Cell j around node v_j carries the flux balance

    dF_j/dt = (1/Dv_j) [ (eta v f + df/dv)_{j+1/2} - (eta v f + df/dv)_{j-1/2} ],

with eta(v) = 1/(1 + v^2/(2 kappa)) + a, the interface values of f averaged,
f_{j+1/2} = (f_j + f_{j+1})/2, and the derivatives taken as difference
quotients.  Homogeneous Dirichlet
values at +-v_max close the system; time stepping is implicit Euler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError
from .kernels import BandedLU, to_band_storage
from .model import GridFunction, ModelParams, VelocityGrid, two_bump_init

__all__ = [
    "TridiagonalOperator",
    "fd_build",
    "fd_step",
    "fd_evolve",
    "fd_mass",
    "fd_initial",
    "FDStepper",
]


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Tridiagonal A acting on interior values.

    ``lower[j]`` = A[j, j-1] (lower[0] unused), ``diag[j]`` = A[j, j],
    ``upper[j]`` = A[j, j+1] (upper[-1] unused), rows j = 1..Nv-1.
    """

    grid: VelocityGrid
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def apply(self, f: np.ndarray) -> np.ndarray:
        y = self.diag * f
        y[1:] += self.lower[1:] * f[:-1]
        y[:-1] += self.upper[:-1] * f[1:]
        return y

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)


def fd_build(grid: VelocityGrid, p: ModelParams) -> TridiagonalOperator:
    """Assemble A from interface fluxes on an arbitrary (non-uniform) grid."""
    v = grid.nodes
    if v.size < 3:
        raise GridError("FD operator needs at least 3 nodes")
    h = np.diff(v)
    if np.any(h <= 0.0):
        raise GridError("degenerate cell in FD grid")
    vm = grid.midpoints
    eta = 1.0 / (1.0 + vm * vm / (2.0 * p.kappa)) + p.a
    dvj = grid.cell_lengths
    em = eta[:-1] * vm[:-1] / 2.0  # at v_{j-1/2}
    ep = eta[1:] * vm[1:] / 2.0  # at v_{j+1/2}
    hm = 1.0 / h[:-1]  # 1/(v_j - v_{j-1})
    hp = 1.0 / h[1:]  # 1/(v_{j+1} - v_j)
    lower = (-em + hm) / dvj
    diag = ((ep - hp) - (em + hm)) / dvj
    upper = (ep + hp) / dvj
    for arr in (lower, diag, upper):
        arr.setflags(write=False)
    return TridiagonalOperator(grid=grid, lower=lower, diag=diag, upper=upper)


class FDStepper:
    """Factorised (I - dt A) for repeated implicit Euler steps."""

    def __init__(self, A: TridiagonalOperator, dt: float, backend: str | None = None):
        if not dt > 0:
            raise ValueError("dt must be positive")
        n = A.n
        diags = {-1: -dt * A.lower[1:], 0: 1.0 - dt * A.diag, 1: -dt * A.upper[:-1]}
        self.lu = BandedLU(to_band_storage(diags, n, 1, 1), 1, 1, backend=backend)
        self.A = A
        self.dt = dt

    def step(self, f: np.ndarray) -> np.ndarray:
        return self.lu.solve(f)

    def march(self, f0: np.ndarray, nsteps: int, save_steps=()):
        return self.lu.march(f0, nsteps, save_steps)


def fd_step(f: GridFunction, A: TridiagonalOperator, dt: float) -> GridFunction:
    """One implicit Euler step (I - dt A) f^{n+1} = f^n."""
    return GridFunction(f.grid, FDStepper(A, dt).step(f.values))


def fd_evolve(f: GridFunction, A: TridiagonalOperator, dt: float, nsteps: int, save_steps=(),
              backend: str | None = None):
    """March ``nsteps`` implicit Euler steps; returns (final, {step: GridFunction})."""
    steps = sorted(set(int(k) for k in save_steps))
    x, snaps = FDStepper(A, dt, backend=backend).march(f.values, nsteps, steps)
    out = {k: GridFunction(f.grid, snaps[i]) for i, k in enumerate(steps)}
    return GridFunction(f.grid, x), out


def fd_mass(f: GridFunction) -> float:
    """Discrete mass sum_j Dv_j f_j."""
    return float(np.dot(f.grid.cell_lengths, f.values))


def fd_initial(grid: VelocityGrid, p: ModelParams, u: float = 2.0) -> GridFunction:
    """Two-bump initial datum sampled at the interior nodes."""
    return GridFunction.sample(grid, lambda v: two_bump_init(v, p, u))
