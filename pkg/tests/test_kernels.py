"""Banded LU backends: compiled extension and scipy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kappafp.errors import SolverError
from kappafp.kernels import BACKEND, BandedLU, available_backends, to_band_storage


def random_banded(n, p, q, seed, dominance=4.0):
    rng = np.random.default_rng(seed)
    A = np.zeros((n, n))
    for k in range(-p, q + 1):
        A += np.diag(rng.normal(size=n - abs(k)), k)
    A += np.diag(dominance * (p + q + 1) * np.ones(n))
    diags = {k: np.diagonal(A, k) for k in range(-p, q + 1)}
    return A, to_band_storage(diags, n, p, q)


def test_python_backend_always_available():
    assert "python" in available_backends()
    assert BACKEND in available_backends()


@pytest.mark.parametrize("p, q", [(1, 1), (2, 2), (1, 2)])
def test_solve_matches_dense(backend, p, q):
    A, ab = random_banded(50, p, q, seed=7)
    b = np.random.default_rng(8).normal(size=50)
    lu = BandedLU(ab, p, q, backend=backend)
    np.testing.assert_allclose(lu.solve(b), np.linalg.solve(A, b), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(lu.matvec(b), A @ b, rtol=1e-13, atol=1e-14)


def test_march_matches_repeated_solves(backend):
    A, ab = random_banded(30, 2, 2, seed=1)
    x0 = np.ones(30)
    lu = BandedLU(ab, 2, 2, backend=backend)
    x, snaps = lu.march(x0, 7, save_steps=(0, 3, 7))
    y = x0.copy()
    ref = {0: y.copy()}
    for k in range(1, 8):
        y = np.linalg.solve(A, y)
        ref[k] = y
    np.testing.assert_allclose(x, ref[7], rtol=1e-12)
    for i, k in enumerate((0, 3, 7)):
        np.testing.assert_allclose(snaps[i], ref[k], rtol=1e-12)


def test_march_rejects_bad_steps(backend):
    _, ab = random_banded(5, 1, 1, seed=2)
    with pytest.raises(ValueError):
        BandedLU(ab, 1, 1, backend=backend).march(np.ones(5), 3, save_steps=(4,))


def test_backends_agree():
    if len(available_backends()) < 2:
        pytest.skip("compiled extension not built")
    _, ab = random_banded(200, 1, 1, seed=3)
    x0 = np.linspace(0, 1, 200)
    out = [BandedLU(ab, 1, 1, backend=b).march(x0, 50)[0] for b in ("compiled", "python")]
    np.testing.assert_allclose(out[0], out[1], rtol=1e-13)


def test_zero_pivot_raises(backend):
    ab = np.zeros((3, 4))
    ab[1] = [0.0, 1.0, 1.0, 1.0]
    with pytest.raises(SolverError):
        BandedLU(ab, 1, 1, backend=backend).solve(np.ones(4))


def test_residual_check():
    _, ab = random_banded(10, 1, 1, seed=4)
    lu = BandedLU(ab, 1, 1)
    with pytest.raises(SolverError):
        lu.check(np.ones(10), np.zeros(10))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 40), seed=st.integers(0, 2 ** 16))
def test_property_solve(n, seed):
    A, ab = random_banded(n, 2, 2, seed)
    b = np.random.default_rng(seed + 1).normal(size=n)
    for backend in available_backends():
        x = BandedLU(ab, 2, 2, backend=backend).solve(b)
        assert np.abs(A @ x - b).max() < 1e-11 * (np.abs(A).max() * np.abs(x).max() + 1)


def test_env_override():
    env = dict(os.environ, KAPPAFP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import kappafp; print(kappafp.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
