# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled banded LU (no pivoting) and multi-step implicit marching.

Storage follows the LAPACK band convention: ab[q + i - j, j] = A[i, j] for a
matrix with p sub-diagonals and q super-diagonals.  After factorisation the
same array holds the unit-lower multipliers below the diagonal row and U on
and above it.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _imin(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a < b else b


cdef inline Py_ssize_t _imax(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a > b else b


def banded_factor(ab, int p, int q):
    """Return the in-band LU factors of the matrix stored in ``ab``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] arr = np.array(ab, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] lu = arr
    cdef Py_ssize_t n = lu.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double piv, l
    cdef int bad = -1
    with nogil:
        for k in range(n):
            piv = lu[q, k]
            if piv == 0.0:
                bad = <int>k
                break
            for i in range(k + 1, _imin(k + p + 1, n)):
                l = lu[q + i - k, k] / piv
                lu[q + i - k, k] = l
                for j in range(k + 1, _imin(k + q + 1, n)):
                    lu[q + i - j, j] -= l * lu[q + k - j, j]
    if bad >= 0:
        raise ZeroDivisionError(f"zero pivot at row {bad}")
    return arr


cdef void _solve_inplace(double[:, ::1] lu, int p, int q, double[::1] x) nogil:
    cdef Py_ssize_t n = lu.shape[1]
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(n):
        s = x[i]
        for k in range(_imax(0, i - p), i):
            s -= lu[q + i - k, k] * x[k]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, _imin(i + q + 1, n)):
            s -= lu[q + i - k, k] * x[k]
        x[i] = s / lu[q, i]


def banded_solve(lu, int p, int q, b):
    """Solve A x = b given the output of :func:`banded_factor`."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(b, dtype=np.float64, copy=True)
    cdef double[:, ::1] luv = lu
    cdef double[::1] xv = x
    with nogil:
        _solve_inplace(luv, p, q, xv)
    return x


def banded_march(lu, int p, int q, x0, cnp.int64_t nsteps, save_steps):
    """Apply x <- A^{-1} x ``nsteps`` times, recording x after the listed steps.

    Returns
    -------
    x : ndarray
        State after the last step.
    snaps : ndarray, shape (len(save_steps), n)
        Copies of the state after each requested step (step 0 = x0).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(x0, dtype=np.float64, copy=True)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] steps = np.asarray(save_steps, dtype=np.int64)
    cdef Py_ssize_t nsave = steps.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] snaps = np.zeros((nsave, x.shape[0]))
    cdef double[:, ::1] luv = lu
    cdef double[::1] xv = x
    cdef double[:, ::1] sv = snaps
    cdef cnp.int64_t[::1] st = steps
    cdef Py_ssize_t isave = 0
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.int64_t step
    cdef Py_ssize_t i
    with nogil:
        while isave < nsave and st[isave] == 0:
            for i in range(n):
                sv[isave, i] = xv[i]
            isave += 1
        for step in range(1, nsteps + 1):
            _solve_inplace(luv, p, q, xv)
            while isave < nsave and st[isave] == step:
                for i in range(n):
                    sv[isave, i] = xv[i]
                isave += 1
    return x, snaps
