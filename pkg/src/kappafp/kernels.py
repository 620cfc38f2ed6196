"""Selection of the banded-solver backend.

The compiled Cython module is used when it is importable; otherwise, or when
the environment variable ``KAPPAFP_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the scipy/LAPACK fallback is used.
"""

from __future__ import annotations

import importlib
import logging
import os

import numpy as np

from .errors import SolverError

logger = logging.getLogger(__name__)

__all__ = ["BACKEND", "BandedLU", "available_backends", "to_band_storage"]


def _load(name):
    if name == "compiled":
        return importlib.import_module("kappafp._banded")
    if name == "python":
        return importlib.import_module("kappafp._banded_py")
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list:
    out = []
    for name in ("compiled", "python"):
        try:
            _load(name)
            out.append(name)
        except ImportError:
            pass
    return out


def _select():
    if os.environ.get("KAPPAFP_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    try:
        _load("compiled")
        return "compiled"
    except ImportError:
        logger.info("compiled kernels unavailable, using the scipy fallback")
        return "python"


BACKEND = _select()


def to_band_storage(diags: dict, n: int, p: int, q: int) -> np.ndarray:
    """Pack diagonals {offset: values} into LAPACK band storage.

    ``diags[k]`` holds A[i, i+k] for all valid i (length n - |k|).
    """
    ab = np.zeros((p + q + 1, n))
    for k, d in diags.items():
        d = np.asarray(d, dtype=float)
        if k >= 0:
            ab[q - k, k:] = d
        else:
            ab[q - k, : n + k] = d
    return ab


def _band_matvec(ab, p, q, x):
    n = x.size
    y = ab[q] * x
    for k in range(1, q + 1):
        y[:-k] += ab[q - k, k:] * x[k:]
    for k in range(1, p + 1):
        y[k:] += ab[q + k, : n - k] * x[:-k]
    return y


class BandedLU:
    """Factorised banded matrix with solve and multi-step march.

    Parameters
    ----------
    ab : ndarray, shape (p+q+1, n)
        Matrix in LAPACK band storage.
    p, q : int
        Number of sub- and super-diagonals.
    backend : {"compiled", "python"}, optional
        Defaults to the module-level selection.
    rtol : float
        Tolerance of the residual check applied to the first solve.
    """

    def __init__(self, ab, p: int, q: int, backend: str | None = None, rtol: float = 1e-12):
        self.ab = np.ascontiguousarray(ab, dtype=float)
        self.p, self.q = int(p), int(q)
        self.n = self.ab.shape[1]
        self.backend = backend or BACKEND
        self._mod = _load(self.backend)
        self.rtol = rtol
        try:
            self._fac = self._mod.banded_factor(self.ab, self.p, self.q)
        except ZeroDivisionError as exc:
            raise SolverError(f"banded factorisation failed: {exc}") from exc
        self._checked = False

    def matvec(self, x):
        return _band_matvec(self.ab, self.p, self.q, np.asarray(x, dtype=float))

    def check(self, x, b):
        r = self.matvec(x) - b
        scale = np.abs(self.matvec(np.abs(x))).max() + np.abs(b).max()
        if not np.all(np.isfinite(x)) or np.abs(r).max() > self.rtol * max(scale, 1e-300):
            raise SolverError(
                f"residual check failed: |r|={np.abs(r).max():.3e}, scale={scale:.3e}"
            )

    def solve(self, b, check: bool = True):
        b = np.ascontiguousarray(b, dtype=float)
        x = np.asarray(self._mod.banded_solve(self._fac, self.p, self.q, b))
        if check:
            self.check(x, b)
        return x

    def march(self, x0, nsteps: int, save_steps=()):
        """x_{k+1} = A^{-1} x_k for k < nsteps; returns (x_final, snapshots)."""
        x0 = np.ascontiguousarray(x0, dtype=float)
        steps = np.asarray(sorted(save_steps), dtype=np.int64)
        if steps.size and (steps[0] < 0 or steps[-1] > nsteps):
            raise ValueError("save steps must lie in [0, nsteps]")
        if nsteps >= 1:
            # residual check on the first step guards the factorisation
            self.check(self.solve(x0, check=False), x0)
        x, snaps = self._mod.banded_march(self._fac, self.p, self.q, x0, int(nsteps), steps)
        x = np.asarray(x)
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite values during time marching")
        return x, np.asarray(snaps)
