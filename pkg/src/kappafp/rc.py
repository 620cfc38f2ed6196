"""Rational-Chebyshev spectral scheme for the unregularised kappa equation.

With L = sqrt(2 kappa) and s = arccot(v/L) in (0, pi), the functions
C_n(v) = cos(n s) are orthogonal for the weight 1/(L(1 + v^2/L^2)).  The
scaled basis Theta_n = C_n Upsilon, Upsilon = sqrt(sigma_kappa f_kappa),
is orthogonal in L^2 weighted by 1/f_kappa, and the Fokker-Planck operator
couples Theta_n only to Theta_{n-4}, ..., Theta_{n+4}.  For odd kappa and even
data only even indices appear, which gives a penta-diagonal ODE system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError
from .kernels import BandedLU, to_band_storage
from .model import ModelParams, kappa_norm_const

__all__ = [
    "RCState",
    "PentaMatrix",
    "check_rc_params",
    "rc_cheb_C",
    "rc_cheb_S",
    "rc_upsilon",
    "rc_theta",
    "rc_theta_derivative",
    "rc_operator_coeffs",
    "rc_build_matrix",
    "rc_project",
    "rc_step",
    "rc_evolve",
    "rc_reconstruct",
    "rc_mass",
    "rc_basis_means",
    "rc_norm_consts",
]


@dataclass(frozen=True)
class RCState:
    """Coefficients a_0, a_2, ..., a_{2M} of f in the Theta basis, at time t."""

    coeffs: np.ndarray
    t: float = 0.0

    @property
    def N(self) -> int:
        return 2 * (self.coeffs.size - 1)


@dataclass(frozen=True, eq=False)
class PentaMatrix:
    """Penta-diagonal system matrix, stored densely and in band form."""

    dense: np.ndarray
    kappa: float

    @property
    def size(self) -> int:
        return self.dense.shape[0]

    def bands(self) -> np.ndarray:
        n = self.size
        diags = {k: np.diagonal(self.dense, k) for k in range(-2, 3) if n > abs(k)}
        return to_band_storage(diags, n, 2, 2)


def check_rc_params(p: ModelParams) -> None:
    """Reject parameters the RC scheme cannot handle."""
    k = p.kappa
    if k != int(k) or int(k) % 2 == 0 or k < 3:
        raise ConfigurationError(
            f"RC scheme requires an odd integer kappa >= 3 (got kappa={k}); "
            "use the GS scheme for other values of kappa"
        )
    if p.a != 0.0:
        raise ConfigurationError(
            "RC scheme solves the unregularised equation (a = 0); use the GS scheme for a > 0"
        )


def _angle(v, L):
    return np.arctan2(L, np.asarray(v, dtype=float))


def rc_cheb_C(n: int, v, L: float):
    """Rational Chebyshev function cos(n arccot(v/L))."""
    return np.cos(n * _angle(v, L))


def rc_cheb_S(n: int, v, L: float):
    """Rational Chebyshev sine function sin((n+1) arccot(v/L))."""
    return np.sin((n + 1) * _angle(v, L))


def rc_upsilon(v, p: ModelParams):
    """Upsilon = (c_kappa/L)^(1/2) (1 + v^2/(2 kappa))^(-(kappa+1)/2)."""
    v = np.asarray(v, dtype=float)
    c = kappa_norm_const(p.kappa)
    return math.sqrt(c / p.L) * np.exp(-0.5 * (p.kappa + 1.0) * np.log1p(v * v / (2.0 * p.kappa)))


def rc_theta(n: int, v, p: ModelParams):
    """Scaled basis function Theta_n = C_n Upsilon."""
    return rc_cheb_C(n, v, p.L) * rc_upsilon(v, p)


def rc_theta_derivative(n: int, v, p: ModelParams):
    """Theta_n' from the three-term derivative relation."""
    v = np.asarray(v, dtype=float)
    k = p.kappa
    r = 1.0 + v * v / (2.0 * k)
    out = -(k + 1.0) / (2.0 * k) * v / r * rc_theta(n, v, p)
    if n > 0:
        out = out + 0.5 * n / p.L / np.sqrt(r) * (rc_theta(n - 1, v, p) - rc_theta(n + 1, v, p))
    return out


def rc_operator_coeffs(n: int, kappa: float) -> tuple:
    """Coefficients (a_n, b_n, c_n, d_n, e_n) of L_kappa Theta_n.

    L_kappa Theta_n = a Theta_{n-4} + b Theta_{n-2} + c Theta_n
    + d Theta_{n+2} + e Theta_{n+4}; absent neighbours carry 0.

    Raises
    ------
    DomainError
        If n is odd or negative.
    """
    if n < 0 or n % 2:
        raise DomainError(f"operator coefficients are defined for even n >= 0, got {n}")
    k = float(kappa)
    if n == 0:
        return (0.0, 0.0, -(k - 1) ** 2 / (16 * k), -(k - 1) / (4 * k), (k - 1) * (k + 3) / (16 * k))
    if n == 2:
        return (
            0.0,
            -(k - 1) / (8 * k),
            -(25 + k * (k - 6)) / (32 * k),
            -(k - 9) / (8 * k),
            (k - 3) * (k + 5) / (32 * k),
        )
    return (
        (k - 1 + n) * (k + 3 - n) / (32 * k),
        -(k - (n - 1) ** 2) / (8 * k),
        (-3 * n * n - (k - 1) ** 2) / (16 * k),
        -(k - (n + 1) ** 2) / (8 * k),
        (k - 1 - n) * (k + 3 + n) / (32 * k),
    )


def rc_build_matrix(N: int, p: ModelParams) -> PentaMatrix:
    """Matrix M of X' = M X for X = (a_0, a_2, ..., a_N).

    Column j carries the image of Theta_{2j}: a_{2j} in row j-2, b in row
    j-1, c on the diagonal, d in row j+1 and e in row j+2.
    """
    check_rc_params(p)
    if N < 0 or N % 2:
        raise DomainError(f"RC truncation N must be even and >= 0, got {N}")
    m = N // 2 + 1
    A = np.zeros((m, m))
    for j in range(m):
        for off, val in zip((-2, -1, 0, 1, 2), rc_operator_coeffs(2 * j, p.kappa)):
            i = j + off
            if 0 <= i < m and val != 0.0:
                A[i, j] = val
    A.setflags(write=False)
    return PentaMatrix(dense=A, kappa=p.kappa)


def rc_norm_consts(m: int) -> np.ndarray:
    """Squared norms of Theta_0, Theta_2, ...: pi for index 0, pi/2 otherwise."""
    c = np.full(m, 0.5 * math.pi)
    c[0] = math.pi
    return c


def _angular_rule(s0: float, s1: float, panels: int, order: int = 8):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(s0, s1, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    s = (0.5 * (a + b) + 0.5 * (b - a) * x).ravel()
    ws = (0.5 * (b - a) * w).ravel()
    return s, ws


def rc_project(f_in: Callable, N: int, p: ModelParams, v_cut: float | None = None,
               panels: int = 2048) -> RCState:
    """Coefficients a_{2l} = (1/c_l) int f_in Theta_{2l} / f_kappa dv.

    The integral is evaluated in s = arccot(v/L), where dv = -L ds / sin^2 s
    and Theta_{2l}/f_kappa dv becomes cos(2 l s) L (c L)^(-1/2) sin^-(kappa+1)(s) ds.

    Parameters
    ----------
    f_in : callable
        Even initial datum.
    N : int
        Even truncation order; coefficients 0, 2, ..., N are returned.
    v_cut : float, optional
        Restrict the integral to |v| <= v_cut (None integrates over R).
    panels : int
        Number of Gauss-Legendre panels of the angular rule.
    """
    check_rc_params(p)
    if N < 0 or N % 2:
        raise DomainError(f"RC truncation N must be even and >= 0, got {N}")
    L, k = p.L, p.kappa
    if v_cut is None or not math.isfinite(v_cut):
        s0, s1 = 0.0, math.pi
    else:
        s0, s1 = math.atan2(L, v_cut), math.atan2(L, -v_cut)
    s, w = _angular_rule(s0, s1, panels)
    v = L / np.tan(s)
    c = kappa_norm_const(k)
    sin_s = np.sin(s)
    with np.errstate(over="ignore", under="ignore"):
        g = f_in(v) * L / math.sqrt(c * L) * np.exp(-(k + 1.0) * np.log(sin_s))
    g = np.where(np.isfinite(g), g, 0.0)
    m = N // 2 + 1
    ls = np.arange(m)[:, None] * 2.0 * s[None, :]
    coeffs = (np.cos(ls) * (w * g)[None, :]).sum(axis=1) / rc_norm_consts(m)
    return RCState(coeffs=coeffs, t=0.0)


def _system(M: PentaMatrix, dt: float, theta: float = 1.0) -> BandedLU:
    m = M.size
    ab = -dt * theta * M.bands()
    ab[2] += 1.0
    return BandedLU(ab, 2, 2)


def rc_step(s: RCState, M: PentaMatrix, dt: float, method: str = "ie") -> RCState:
    """One step of (I - dt M) X^{n+1} = X^n (implicit Euler) or Crank-Nicolson."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if method == "ie":
        x = _system(M, dt).solve(s.coeffs)
    elif method == "cn":
        x = _system(M, dt, 0.5).solve(s.coeffs + 0.5 * dt * (M.dense @ s.coeffs))
    else:
        raise ValueError(f"unknown integrator {method!r}")
    return RCState(coeffs=x, t=s.t + dt)


def rc_evolve(s: RCState, M: PentaMatrix, dt: float, nsteps: int, save_steps=(),
              method: str = "ie"):
    """Advance ``nsteps`` steps; returns (final state, {step: RCState})."""
    save_steps = sorted(set(int(k) for k in save_steps))
    if method == "ie":
        lu = _system(M, dt)
        x, snaps = lu.march(s.coeffs, nsteps, save_steps)
    elif method == "cn":
        lu = _system(M, dt, 0.5)
        x = s.coeffs.copy()
        snaps = []
        want = set(save_steps)
        if 0 in want:
            snaps.append(x.copy())
        for n in range(1, nsteps + 1):
            x = lu.solve(x + 0.5 * dt * (M.dense @ x), check=(n == 1))
            if n in want:
                snaps.append(x.copy())
    else:
        raise ValueError(f"unknown integrator {method!r}")
    out = {k: RCState(coeffs=np.array(snaps[i]), t=s.t + k * dt) for i, k in enumerate(save_steps)}
    return RCState(coeffs=np.asarray(x), t=s.t + nsteps * dt), out


def rc_reconstruct(s: RCState, v, p: ModelParams):
    """f(v) = sum_k a_{2k} Theta_{2k}(v)."""
    v = np.asarray(v, dtype=float)
    ang = _angle(v, p.L)
    n = 2 * np.arange(s.coeffs.size)
    C = np.cos(np.multiply.outer(n, ang))
    return (s.coeffs @ C.reshape(n.size, -1)).reshape(v.shape) * rc_upsilon(v, p)


@lru_cache(maxsize=64)
def _basis_means(kappa: float, m: int) -> tuple:
    # <Theta_n> = (c L)^(1/2) int_0^pi cos(n s) sin^(kappa-1)(s) ds
    c = kappa_norm_const(kappa)
    L = math.sqrt(2.0 * kappa)
    s, w = _angular_rule(0.0, math.pi, 64, order=16)
    base = w * np.sin(s) ** (kappa - 1.0)
    vals = [math.sqrt(c * L) * float(np.sum(base * np.cos(2 * l * s))) for l in range(m)]
    return tuple(vals)


def rc_basis_means(m: int, p: ModelParams) -> np.ndarray:
    """<Theta_0>, <Theta_2>, ..., <Theta_{2(m-1)}>; zero beyond index kappa-1."""
    check_rc_params(p)
    return np.array(_basis_means(float(p.kappa), int(m)))


def rc_mass(s: RCState, p: ModelParams) -> float:
    """Total mass sum_k a_{2k} <Theta_{2k}>."""
    if p.kappa == 3:
        a2 = s.coeffs[1] if s.coeffs.size > 1 else 0.0
        return math.sqrt(kappa_norm_const(3.0) * math.sqrt(6.0)) * 0.5 * math.pi * (s.coeffs[0] - 0.5 * a2)
    return float(rc_basis_means(s.coeffs.size, p) @ s.coeffs)
