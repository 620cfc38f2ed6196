"""Special functions, moments of kappa distributions and adaptive quadrature.

The quadrature routine integrates over the whole real line (or the half
line) after the compactifying change of variables

    v = L * xi / sqrt(1 - xi**2),    xi in (-1, 1),

and refines an adaptive Gauss-Kronrod (7, 15) partition of the xi interval.
Integrands are evaluated in vectorised form and may be vector valued, which
lets a whole family of integrals (all moments, all projections) share one
adaptive mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AccuracyError, DivergentMomentError, DomainError

__all__ = [
    "gamma_fn",
    "log_gamma",
    "kappa_moment",
    "reg_kappa_moment",
    "adaptive_quad",
    "MomentTable",
    "moment_table",
]

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point node set and the embedded 7-point Gauss weights
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[1:7:2] = _WG[:3]
G_WEIGHTS[7] = _WG[3]
G_WEIGHTS[9:15:2] = _WG[2::-1]

_TINY = 1e-300


def gamma_fn(x: float) -> float:
    """Euler Gamma function for real x > 0.

    Parameters
    ----------
    x : float
        Positive argument.

    Returns
    -------
    float
        Gamma(x); evaluated through log-Gamma for x > 20.

    Raises
    ------
    DomainError
        If x is not strictly positive.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    if x <= 20.0:
        return math.gamma(x)
    return math.exp(math.lgamma(x))


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def kappa_moment(l: int, kappa: float) -> float:
    """Absolute moment int |v|^l f_kappa(v) dv of the kappa distribution.

    Parameters
    ----------
    l : int
        Moment order, 0 <= l < 2 kappa - 1.
    kappa : float
        Shape parameter, kappa > 1/2.

    Returns
    -------
    float
        (2 kappa)^(l/2) Gamma((l+1)/2) Gamma(kappa-(l+1)/2)
        / (sqrt(pi) Gamma(kappa-1/2)).

    Raises
    ------
    DivergentMomentError
        If l >= 2 kappa - 1.
    """
    if l < 0 or int(l) != l:
        raise DomainError(f"moment order must be a non-negative integer, got {l}")
    if not kappa > 0.5:
        raise DomainError(f"kappa must exceed 1/2, got {kappa}")
    if l >= 2.0 * kappa - 1.0:
        raise DivergentMomentError(
            f"moment of order {l} diverges for kappa={kappa} (needs l < {2 * kappa - 1})"
        )
    h = 0.5 * (l + 1)
    logm = (
        0.5 * l * math.log(2.0 * kappa)
        + math.lgamma(h)
        + math.lgamma(kappa - h)
        - math.lgamma(kappa - 0.5)
        - 0.5 * math.log(math.pi)
    )
    return math.exp(logm)


def _log_norm_const(kappa: float) -> float:
    return (
        math.lgamma(kappa)
        - math.lgamma(kappa - 0.5)
        - 0.5 * math.log(2.0 * math.pi * kappa)
    )


def _moment_scale(l: int, kappa: float, a: float) -> float:
    """Location of the peak of v^l (1+v^2/2k)^-k exp(-a v^2/2) on v > 0."""
    if l == 0:
        return math.sqrt(2.0 * kappa) if a < 1.0 else 1.0 / math.sqrt(a)
    v = np.geomspace(1e-3, 1e8, 2000)
    g = l * np.log(v) - kappa * np.log1p(v * v / (2.0 * kappa)) - 0.5 * a * v * v
    return float(max(v[np.argmax(g)], 1.0))


def reg_kappa_moment(l: int, kappa: float, a: float, rtol: float = 1e-12) -> float:
    """Absolute moment int |v|^l f_{kappa,a}(v) dv of the regularised distribution.

    f_{kappa,a} = c_kappa (1 + v^2/(2 kappa))^-kappa exp(-a v^2/2) with the
    unregularised constant c_kappa, so the l=0 moment is below one for a > 0.

    Parameters
    ----------
    l : int
        Moment order (any l >= 0).
    kappa : float
        Shape parameter, kappa > 1/2.
    a : float
        Cutoff parameter, a > 0.
    rtol : float
        Requested relative accuracy of the quadrature.

    Raises
    ------
    DomainError
        For a <= 0; use :func:`kappa_moment` for the unregularised moments.
    """
    if not a > 0.0:
        raise DomainError("reg_kappa_moment needs a > 0; use kappa_moment for a = 0")
    if l < 0 or int(l) != l:
        raise DomainError(f"moment order must be a non-negative integer, got {l}")
    logc = _log_norm_const(kappa)

    def integrand(v):
        with np.errstate(divide="ignore"):
            lv = np.log(v) if l > 0 else 0.0
        return np.exp(logc + l * lv - kappa * np.log1p(v * v / (2.0 * kappa)) - 0.5 * a * v * v)

    scale = _moment_scale(l, kappa, a)
    return 2.0 * float(adaptive_quad(integrand, mode="half-line", scale=scale, rtol=rtol))


@dataclass(frozen=True)
class MomentTable:
    """Absolute moments m_0..m_Lmax of the weight f_{kappa,a}.

    For a = 0 the table stops before the first divergent order.
    """

    kappa: float
    a: float
    values: tuple

    def __getitem__(self, l: int) -> float:
        return self.values[l]

    def __len__(self) -> int:
        return len(self.values)


def moment_table(kappa: float, a: float, lmax: int) -> MomentTable:
    """Tabulate m_l for l = 0..lmax (truncated at divergence when a = 0)."""
    vals = []
    for l in range(lmax + 1):
        if a > 0.0:
            vals.append(reg_kappa_moment(l, kappa, a))
        elif l < 2.0 * kappa - 1.0:
            vals.append(kappa_moment(l, kappa))
        else:
            break
    return MomentTable(kappa=float(kappa), a=float(a), values=tuple(vals))


def _gk_panel(func, lo, hi, scale, vmap="algebraic"):
    """Apply the 7/15 rule on the xi panels [lo, hi]; return (K, |K-G|, K_abs)."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    xi = c[:, None] + h[:, None] * GK_NODES[None, :]
    one_m = (1.0 - xi) * (1.0 + xi)
    edge = one_m <= 0.0  # xi rounded onto +-1: the integrand is taken to vanish there
    one_m = np.where(edge, 1.0, one_m)
    if vmap == "algebraic":
        v = np.where(edge, 0.0, scale * xi / np.sqrt(one_m))
        jac = np.where(edge, 0.0, scale / one_m ** 1.5)
    else:
        v = np.where(edge, 0.0, scale * xi / one_m)
        jac = np.where(edge, 0.0, scale * (1.0 + xi * xi) / (one_m * one_m))
    with np.errstate(over="ignore", invalid="ignore"):
        fx = np.asarray(func(v.ravel()), dtype=float)
        fx = fx.reshape(fx.shape[:-1] + v.shape) * jac
    if not np.all(np.isfinite(fx)):
        raise AccuracyError("integrand produced non-finite values", estimate=float("inf"))
    k = np.tensordot(fx, GK_WEIGHTS, axes=([-1], [0])) * h
    g = np.tensordot(fx, G_WEIGHTS, axes=([-1], [0])) * h
    ka = np.tensordot(np.abs(fx), GK_WEIGHTS, axes=([-1], [0])) * h
    return k, np.abs(k - g), ka


def adaptive_quad(
    f: Callable[[np.ndarray], np.ndarray],
    mode: str = "whole-line",
    scale: float = 1.0,
    rtol: float = 1e-12,
    atol: float = 0.0,
    reference: str = "value",
    initial_panels: int = 16,
    max_panels: int = 20000,
    vmap: str = "algebraic",
):
    """Integrate f over the real line or the positive half line.

    Parameters
    ----------
    f : callable
        Vectorised integrand.  Given a 1-D array ``v`` it returns an array of
        shape ``v.shape`` (scalar integral) or ``(m, v.size)`` (m integrals).
    mode : {"whole-line", "half-line"}
        Integrate over (-inf, inf) or (0, inf).
    scale : float
        Map scale L of the compactifying substitution; should be of the order
        of the width of the integrand.
    rtol, atol : float
        Relative and absolute tolerances. An absolute floor of 1e-300 is
        always applied.
    reference : {"value", "abs"}
        Quantity the relative tolerance refers to: the integral itself, or
        the integral of |f| (appropriate for cancelling integrands).
    initial_panels, max_panels : int
        Starting partition of the xi interval and refinement limit.
    vmap : {"algebraic", "rational"}
        Compactifying map of xi in (-1, 1): v = L xi / sqrt(1 - xi^2)
        (default) or v = L xi / (1 - xi^2).  The rational map keeps
        integrands with |v|^-p tails, p >= 2, bounded at the end points and
        should be used for slowly decaying power laws.

    Returns
    -------
    float or ndarray
        Integral value(s).

    Raises
    ------
    AccuracyError
        If the tolerance is not met before ``max_panels`` panels are used.
    """
    if mode == "whole-line":
        edges = np.linspace(-1.0, 1.0, initial_panels + 1)
    elif mode == "half-line":
        edges = np.linspace(0.0, 1.0, initial_panels + 1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if vmap not in ("algebraic", "rational"):
        raise ValueError(f"unknown vmap {vmap!r}")
    if reference not in ("value", "abs"):
        raise ValueError(f"unknown reference {reference!r}")
    lo, hi = edges[:-1], edges[1:]
    val, err, vabs = _gk_panel(f, lo, hi, scale, vmap)
    scalar = val.ndim == 1
    if scalar:
        val, err, vabs = val[None], err[None], vabs[None]
    floor = max(atol, _TINY)

    done_val = np.zeros(val.shape[0])
    done_err = np.zeros(val.shape[0])
    done_abs = np.zeros(val.shape[0])
    while True:
        tot = done_val + val.sum(axis=1)
        tot_err = done_err + err.sum(axis=1)
        ref = np.abs(tot) if reference == "value" else done_abs + vabs.sum(axis=1)
        tol = np.maximum(rtol * ref, floor)
        if np.all(tot_err <= tol):
            break
        npan = lo.size
        if npan > max_panels:
            raise AccuracyError(
                f"adaptive_quad: tolerance not reached with {npan} panels "
                f"(error estimate {tot_err.max():.3e})",
                estimate=float(tot_err.max()),
            )
        # normalised error of each panel against its share of the budget
        share = (err / tol[:, None]).max(axis=0)
        order = np.argsort(share)[::-1]
        cum = np.cumsum(share[order])
        nsplit = int(np.searchsorted(cum, 0.5 * cum[-1])) + 1
        nsplit = min(max(nsplit, 1), 512)
        split = np.zeros(npan, dtype=bool)
        split[order[:nsplit]] = True
        # panels whose error is negligible are retired to the accumulators
        negligible = share < 1e-3 / max(npan, 1)
        retire = negligible & ~split
        done_val += val[:, retire].sum(axis=1)
        done_err += err[:, retire].sum(axis=1)
        done_abs += vabs[:, retire].sum(axis=1)
        keep = ~split & ~retire
        slo, shi = lo[split], hi[split]
        if np.any(shi - slo < 1e-15):
            raise AccuracyError(
                "adaptive_quad: panel width underflow before reaching tolerance "
                f"(error estimate {tot_err.max():.3e})",
                estimate=float(tot_err.max()),
            )
        mid = 0.5 * (slo + shi)
        nlo = np.concatenate([slo, mid])
        nhi = np.concatenate([mid, shi])
        nval, nerr, nabs = _gk_panel(f, nlo, nhi, scale, vmap)
        if scalar:
            nval, nerr, nabs = nval[None], nerr[None], nabs[None]
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        val = np.concatenate([val[:, keep], nval], axis=1)
        err = np.concatenate([err[:, keep], nerr], axis=1)
        vabs = np.concatenate([vabs[:, keep], nabs], axis=1)
    out = done_val + val.sum(axis=1)
    return float(out[0]) if scalar else out
