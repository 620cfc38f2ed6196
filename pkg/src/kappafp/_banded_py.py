"""Fallback banded kernels built on LAPACK (gbtrf/gbtrs) through scipy.

Same call signatures as the compiled module; the factor object differs
(partial pivoting is used here) but solutions agree to rounding.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack


def banded_factor(ab, p, q):
    ab = np.asarray(ab, dtype=float)
    n = ab.shape[1]
    ext = np.zeros((2 * p + q + 1, n))
    ext[p:] = ab
    lu, ipiv, info = lapack.dgbtrf(ext, p, q)
    if info > 0:
        raise ZeroDivisionError(f"zero pivot at row {info - 1}")
    if info < 0:
        raise ValueError(f"dgbtrf: illegal argument {-info}")
    return (lu, ipiv)


def banded_solve(fac, p, q, b):
    lu, ipiv = fac
    x, info = lapack.dgbtrs(lu, p, q, np.array(b, dtype=float), ipiv)
    if info != 0:
        raise ValueError(f"dgbtrs failed with info={info}")
    return x


def banded_march(fac, p, q, x0, nsteps, save_steps):
    lu, ipiv = fac
    x = np.array(x0, dtype=float)
    steps = np.asarray(save_steps, dtype=np.int64)
    snaps = np.zeros((steps.size, x.size))
    isave = 0
    while isave < steps.size and steps[isave] == 0:
        snaps[isave] = x
        isave += 1
    gbtrs = lapack.dgbtrs
    for step in range(1, int(nsteps) + 1):
        x, info = gbtrs(lu, p, q, x, ipiv)
        while isave < steps.size and steps[isave] == step:
            snaps[isave] = x
            isave += 1
    return x, snaps
