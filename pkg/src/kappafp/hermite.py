"""Hermite-function solution of the Maxwellian Fokker-Planck equation.

The operator -d/dv[M d/dv(f/M)] has eigenfunctions psi_k (Hermite functions
scaled by the Maxwellian) with eigenvalues k, so every coefficient evolves in
closed form: alpha_k(t) = exp(-k t) alpha_k(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import maxwellian
from .special import adaptive_quad

__all__ = [
    "HermiteState",
    "hermite_fn",
    "hermite_table",
    "hermite_project",
    "hermite_evolve",
    "hermite_reconstruct",
    "hermite_distance",
    "hermite_exact_two_bump",
]

_FLUSH = 40.0


@dataclass(frozen=True)
class HermiteState:
    """Coefficients alpha_0..alpha_N of f in the basis psi_k, at time t."""

    coeffs: np.ndarray
    t: float = 0.0


def _poly_table(N: int, v: np.ndarray) -> np.ndarray:
    """Normalised probabilists' Hermite polynomials h_k = psi_k / M, k = 0..N."""
    h = np.empty((N + 1,) + v.shape)
    h[0] = 1.0
    if N >= 1:
        h[1] = v
    for k in range(1, N):
        h[k + 1] = (v * h[k] - math.sqrt(k) * h[k - 1]) / math.sqrt(k + 1)
    return h


def hermite_table(N: int, v) -> np.ndarray:
    """psi_0..psi_N evaluated at v; rows indexed by k."""
    v = np.asarray(v, dtype=float)
    out = _poly_table(N, v) * maxwellian(v)
    out[:, np.abs(v) > _FLUSH] = 0.0
    return out


def hermite_fn(k: int, v):
    """Hermite function psi_k(v) from sqrt(k+1) psi_{k+1} = v psi_k - sqrt(k) psi_{k-1}."""
    if k < 0:
        raise ValueError("k must be non-negative")
    out = hermite_table(k, v)[k]
    return out if out.ndim else float(out)


def hermite_project(f_in: Callable, N: int, rtol: float = 1e-12) -> HermiteState:
    """alpha_k(0) = int f_in psi_k / M dv for k = 0..N.

    Raises
    ------
    AccuracyError
        If f_in h_k is not integrable, which happens for heavy-tailed input
        such as a kappa distribution.
    """

    def integrand(v):
        return _poly_table(N, v) * f_in(v)

    c = adaptive_quad(integrand, scale=2.0, rtol=rtol, atol=1e-15, reference="abs")
    return HermiteState(coeffs=np.asarray(c), t=0.0)


def hermite_evolve(s: HermiteState, t: float) -> HermiteState:
    """Advance every coefficient by exp(-k t) over a time span t >= 0."""
    if t < 0:
        raise ValueError("t must be non-negative")
    k = np.arange(s.coeffs.size)
    return HermiteState(coeffs=s.coeffs * np.exp(-k * t), t=s.t + t)


def hermite_reconstruct(s: HermiteState, v):
    """Sum_k alpha_k psi_k(v)."""
    return s.coeffs @ hermite_table(s.coeffs.size - 1, v)


def hermite_distance(s: HermiteState) -> float:
    """||f - alpha_0 M|| in L^2_{1/M}, i.e. the l2 norm of alpha_1..alpha_N."""
    return float(np.linalg.norm(s.coeffs[1:]))


def hermite_exact_two_bump(v, t: float, u: float = 2.0):
    """Exact solution from 0.5[M(v-u) + M(v+u)]: the bump centres relax as u exp(-t)."""
    c = u * math.exp(-t)
    v = np.asarray(v, dtype=float)
    return 0.5 * (maxwellian(v - c) + maxwellian(v + c))
