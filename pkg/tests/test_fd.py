"""Finite-volume operator, implicit Euler stepping and discrete mass."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kappafp.errors import GridError
from kappafp.fd import FDStepper, fd_build, fd_evolve, fd_initial, fd_mass, fd_step
from kappafp.harness import RunConfig, convergence_study
from kappafp.model import GridFunction, ModelParams, VelocityGrid, f_kappa_a

P3 = ModelParams(3.0)


def eta(v, p):
    return 1.0 / (1.0 + v * v / (2.0 * p.kappa)) + p.a


class TestOperator:
    @pytest.mark.parametrize("p", [P3, ModelParams(31.0, 1e-3)])
    def test_uniform_entries(self, p):
        g = VelocityGrid.uniform(15.0, 100)
        A = fd_build(g, p)
        h = 0.3
        j = 37  # interior row index; node v_{j+1}
        v = g.interior[j]
        vp, vm = v + h / 2, v - h / 2
        assert A.upper[j] == pytest.approx((eta(vp, p) * vp / 2 + 1 / h) / h, rel=1e-12)
        assert A.lower[j] == pytest.approx((-eta(vm, p) * vm / 2 + 1 / h) / h, rel=1e-12)
        assert A.diag[j] == pytest.approx((eta(vp, p) * vp / 2 - eta(vm, p) * vm / 2 - 2 / h) / h,
                                          rel=1e-12)

    def test_dense_matches_apply(self):
        A = fd_build(VelocityGrid.uniform(5.0, 20), P3)
        x = np.random.default_rng(0).normal(size=A.n)
        np.testing.assert_allclose(A.dense() @ x, A.apply(x), rtol=1e-14)

    def test_steady_residual_second_order(self):
        res = []
        for N_v in (300, 600, 1200):
            g = VelocityGrid.uniform(30.0, N_v)
            A = fd_build(g, P3)
            f = f_kappa_a(g.interior, P3)
            r = A.apply(f)
            res.append(np.abs(r[np.abs(g.interior) <= 10.0]).max())
        assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)
        assert res[1] / res[2] == pytest.approx(4.0, rel=0.1)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 16), stretch=st.sampled_from([1.0, 1.01, 1.05]))
    def test_summation_by_parts(self, seed, stretch):
        g = VelocityGrid.stretched(10.0, 40, stretch)
        A = fd_build(g, P3)
        f = np.random.default_rng(seed).normal(size=A.n)
        v, vm = g.nodes, g.midpoints
        h = np.diff(v)
        # interface fluxes eta v (f_j + f_{j+1})/2 + (f_{j+1} - f_j)/h with f = 0 on the boundary
        right = eta(vm[-1], P3) * vm[-1] * f[-1] / 2 - f[-1] / h[-1]
        left = eta(vm[0], P3) * vm[0] * f[0] / 2 + f[0] / h[0]
        total = float(np.dot(g.cell_lengths, A.apply(f)))
        assert total == pytest.approx(right - left, abs=1e-10 * np.abs(f).max() / h.min() ** 2)

    def test_stretched_grid_steady_residual(self):
        res = []
        for N_v in (200, 400):
            g = VelocityGrid.stretched(30.0, N_v, 1.0 + 2.0 / N_v)
            f = f_kappa_a(g.interior, P3)
            r = fd_build(g, P3).apply(f)
            res.append(np.abs(r[np.abs(g.interior) <= 10.0]).max())
        assert res[1] < res[0] / 3.0

    def test_maxwellian_limit_is_drift_diffusion(self):
        g = VelocityGrid.uniform(8.0, 160)
        A = fd_build(g, ModelParams(1e12))
        f = np.exp(-0.5 * g.interior ** 2)
        r = A.apply(f)
        assert np.abs(r[np.abs(g.interior) < 5]).max() < 1e-2

    def test_too_few_nodes(self):
        with pytest.raises(GridError):
            VelocityGrid(np.array([0.0, 1.0]))


class TestStepping:
    def test_zero(self):
        g = VelocityGrid.uniform(15.0, 100)
        f = GridFunction(g, np.zeros(99))
        assert np.all(fd_step(f, fd_build(g, P3), 0.1).values == 0.0)

    def test_consistency(self):
        g = VelocityGrid.uniform(15.0, 100)
        A = fd_build(g, P3)
        f = fd_initial(g, P3)
        d = [np.abs((fd_step(f, A, dt).values - f.values) / dt - A.apply(f.values)).max()
             for dt in (1e-4, 1e-5)]
        assert d[1] < 0.2 * d[0]

    def test_near_steady(self):
        g = VelocityGrid.uniform(30.0, 2001)
        A = fd_build(g, P3)
        f0 = GridFunction.sample(g, lambda v: f_kappa_a(v, P3))
        f1, _ = fd_evolve(f0, A, 0.01, 100)
        assert np.abs(f1.values - f0.values).max() < 1e-6

    def test_evolve_snapshots(self):
        g = VelocityGrid.uniform(15.0, 100)
        A = fd_build(g, P3)
        f0 = fd_initial(g, P3)
        x = f0
        for _ in range(5):
            x = fd_step(x, A, 0.01)
        final, snaps = fd_evolve(f0, A, 0.01, 5, save_steps=(0, 5))
        np.testing.assert_allclose(final.values, x.values, rtol=1e-13)
        np.testing.assert_array_equal(snaps[0].values, f0.values)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            FDStepper(fd_build(VelocityGrid.uniform(1.0, 10), P3), 0.0)

    def test_first_order_in_dt(self):
        cfg = RunConfig("fd", N_v=100, v_max=15.0, T=2.0, output_times=(2.0,))
        res = convergence_study(cfg, [0.04, 0.02, 0.01, 0.005], t_star=2.0, self_ref_dt=1e-4)
        assert 0.8 <= res.slope <= 1.2
        assert len(res.fitted) == 4


class TestMass:
    def test_constant(self):
        g = VelocityGrid.uniform(15.0, 100)
        assert fd_mass(GridFunction(g, np.full(99, 2.0))) == pytest.approx(2.0 * (30.0 - 0.3))

    def test_two_bump(self):
        g = VelocityGrid.uniform(30.0, 1001)
        m = fd_mass(fd_initial(g, P3))
        assert abs(m - 1.0) < 2e-4
        # the bulk of the defect is the exact tail beyond |v| = 30 (mpmath: 1.296e-6)
        assert m < 1.0

    def test_truncation_leaks_mass(self):
        drops = {}
        for vm in (15.0, 30.0):
            g = VelocityGrid.uniform(vm, int(round(vm / 0.15)))
            f0 = fd_initial(g, P3)
            f, _ = fd_evolve(f0, fd_build(g, P3), 0.01, 1000)
            drops[vm] = fd_mass(f0) - fd_mass(f)
        assert drops[15.0] > drops[30.0] > 0.0

    def test_mass_monotone_decay(self):
        g = VelocityGrid.uniform(15.0, 100)
        A = fd_build(g, P3)
        f0 = fd_initial(g, P3)
        _, snaps = fd_evolve(f0, A, 0.01, 1000, save_steps=range(0, 1001, 100))
        m = [fd_mass(snaps[k]) for k in sorted(snaps)]
        assert all(b < a for a, b in zip(m, m[1:]))
