"""Equilibria, grids, initial data, stationary states and error norms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kappafp.errors import DomainError, GridError, ShapeError
from kappafp.model import (GridFunction, ModelParams, VelocityGrid, discrete_l2_error, f_kappa,
                           f_kappa_a, kappa_norm_const, maxwellian, reg_mass,
                           schrodinger_potential, stationary_state, two_bump_init,
                           weighted_l2_error)
from kappafp.special import adaptive_quad

C3 = 8.0 / (3.0 * math.pi * math.sqrt(6.0))  # 0.3465319116594116
C31 = 0.3940935462691503414  # mpmath


class TestParams:
    def test_L(self):
        p = ModelParams(3.0)
        assert p.L ** 2 == pytest.approx(6.0, rel=1e-15)
        assert p.nu == 1.0

    @pytest.mark.parametrize("kappa, a", [(0.5, 0.0), (0.2, 0.0), (3.0, -1e-3), (math.inf, 0.0)])
    def test_invalid(self, kappa, a):
        with pytest.raises(DomainError):
            ModelParams(kappa, a)

    def test_frozen(self):
        p = ModelParams(3.0)
        with pytest.raises(AttributeError):
            p.kappa = 4.0


class TestEquilibria:
    def test_maxwellian(self):
        assert maxwellian(0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-15)
        assert maxwellian(60.0) == 0.0
        assert adaptive_quad(maxwellian) == pytest.approx(1.0, abs=1e-13)

    def test_norm_const(self):
        assert kappa_norm_const(3.0) == pytest.approx(C3, rel=1e-14)
        assert kappa_norm_const(31.0) == pytest.approx(C31, rel=1e-14)
        assert kappa_norm_const(1e6) == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-5)
        with pytest.raises(DomainError):
            kappa_norm_const(0.5)

    def test_norm_const_matches_quadrature(self):
        q = adaptive_quad(lambda v: (1 + v * v / 62.0) ** -31.0, scale=8.0)
        assert kappa_norm_const(31.0) == pytest.approx(1.0 / q, rel=1e-12)

    def test_f_kappa_values(self):
        p = ModelParams(3.0)
        assert f_kappa(0.0, p) == pytest.approx(C3, rel=1e-14)
        assert f_kappa(math.sqrt(6.0), p) == pytest.approx(C3 / 8.0, rel=1e-14)

    @pytest.mark.parametrize("kappa", [2.0, 3.0, 5.0, 31.0])
    def test_normalised(self, kappa):
        p = ModelParams(kappa)
        assert adaptive_quad(lambda v: f_kappa(v, p), scale=p.L) == pytest.approx(1.0, abs=1e-10)

    def test_maxwellian_limit(self):
        v = np.array([0.0, 1.0, 2.0, 3.0])
        assert np.max(np.abs(f_kappa(v, ModelParams(1e3)) - maxwellian(v))) < 5e-4

    def test_regularised(self):
        p = ModelParams(31.0, 1e-3)
        v = np.linspace(-50, 50, 101)
        np.testing.assert_allclose(f_kappa_a(v, ModelParams(31.0)), f_kappa(v, p), rtol=1e-15)
        assert f_kappa_a(0.0, p) == pytest.approx(C31, rel=1e-14)
        m = reg_mass(p)
        assert 0.0 < m < 1.0
        assert m == pytest.approx(0.9994750045040880747, rel=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(v=st.floats(-1e3, 1e3), kappa=st.floats(0.6, 100.0), a=st.floats(0.0, 1.0))
    def test_cutoff_bounded_by_kappa(self, v, kappa, a):
        p = ModelParams(kappa, a)
        fa, fk = float(f_kappa_a(v, p)), float(f_kappa(v, p))
        assert fa <= fk
        if v != 0.0 and a > 0.0 and fk > 1e-250 and a * v * v > 1e-12:
            assert fa < fk


class TestInitialData:
    def test_value_at_zero(self):
        p = ModelParams(3.0)
        assert two_bump_init(0.0, p, 2.0) == pytest.approx(0.07485089291843290636, rel=1e-14)

    @pytest.mark.parametrize("v", [0.5, 1.0, 3.0])
    def test_even(self, v):
        p = ModelParams(3.0)
        assert two_bump_init(v, p) == pytest.approx(two_bump_init(-v, p), rel=1e-15)

    @pytest.mark.parametrize("kappa", [3.0, 31.0])
    def test_mass(self, kappa):
        p = ModelParams(kappa, 1e-3)  # a is ignored by the initial datum
        q = adaptive_quad(lambda v: two_bump_init(v, p), scale=p.L)
        assert q == pytest.approx(1.0, abs=1e-10)


class TestStationary:
    def test_unregularised(self):
        f = stationary_state(ModelParams(3.0), 1.0)
        assert f.n == 1.0
        v = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(f(v), f_kappa(v, ModelParams(3.0)))

    def test_regularised(self):
        p = ModelParams(31.0, 1e-3)
        f = stationary_state(p, 1.0)
        assert f.n == pytest.approx(1.000525271260958060, rel=1e-10)
        assert adaptive_quad(f, scale=p.L) == pytest.approx(1.0, rel=1e-10)

    def test_zero_mass(self):
        f = stationary_state(ModelParams(3.0), 0.0)
        assert np.all(f(np.linspace(-3, 3, 7)) == 0.0)


class TestPotential:
    def test_origin(self):
        assert schrodinger_potential(0.0, ModelParams(3.0)) == pytest.approx(-0.5)

    def test_regularised_tail(self):
        a, v = 0.1, 100.0
        q = schrodinger_potential(v, ModelParams(3.0, a))
        assert q == pytest.approx(a * a * v * v / 4 - a / 2, rel=0.05)  # = 24.95

    def test_unregularised_tail(self):
        q = schrodinger_potential(1e3, ModelParams(3.0))
        assert q == pytest.approx(1.2e-5, rel=0.1)


class TestGrid:
    def test_uniform(self):
        g = VelocityGrid.uniform(15.0, 100)
        assert g.N_v == 100 and g.v_max == 15.0
        assert g.interior.size == 99
        np.testing.assert_allclose(g.nodes, -g.nodes[::-1], atol=1e-14)
        np.testing.assert_allclose(g.cell_lengths, 0.3, rtol=1e-12)

    def test_stretched(self):
        g = VelocityGrid.stretched(30.0, 200, 1.02)
        assert np.all(np.diff(g.nodes) > 0)
        assert g.nodes[0] == pytest.approx(-30.0) and g.nodes[-1] == pytest.approx(30.0)
        assert np.all(g.cell_lengths > 0)
        np.testing.assert_allclose(g.cell_lengths, np.diff(g.midpoints))

    @pytest.mark.parametrize("nodes", [[0.0, 1.0], [0.0, 1.0, 1.0, 2.0], [0.0, 2.0, 1.0]])
    def test_invalid(self, nodes):
        with pytest.raises(GridError):
            VelocityGrid(np.array(nodes))

    def test_read_only(self):
        g = VelocityGrid.uniform(1.0, 4)
        with pytest.raises(ValueError):
            g.nodes[0] = 3.0

    def test_grid_function_shape(self):
        g = VelocityGrid.uniform(1.0, 4)
        with pytest.raises(ShapeError):
            GridFunction(g, np.zeros(5))
        f = GridFunction.sample(g, lambda v: 1.0 + 0 * v)
        assert f.full()[0] == 0.0 and f.full()[-1] == 0.0 and f.full()[1] == 1.0


class TestNorms:
    def test_weighted_zero_and_symmetric(self):
        p = ModelParams(3.0)
        fk = lambda v: f_kappa(v, p)
        g = lambda v: two_bump_init(v, p)
        w = lambda v: 1.0 / f_kappa(v, p)
        assert weighted_l2_error(fk, fk, w) == 0.0
        assert weighted_l2_error(fk, g, w, scale=p.L) == pytest.approx(
            weighted_l2_error(g, fk, w, scale=p.L), rel=1e-12)

    def test_weighted_unit(self):
        p = ModelParams(3.0)
        e = weighted_l2_error(lambda v: f_kappa(v, p), lambda v: 0 * v,
                              lambda v: 1.0 / f_kappa(v, p), scale=p.L)
        assert e == pytest.approx(1.0, rel=1e-10)

    def test_discrete_examples(self):
        g = VelocityGrid.uniform(15.0, 100)
        z = GridFunction(g, np.zeros(99))
        assert discrete_l2_error(z, z) == 0.0
        d = np.zeros(99)
        d[40] = 0.5
        assert discrete_l2_error(z, GridFunction(g, d)) == pytest.approx(0.5 * math.sqrt(0.3))
        # constant offset on all N_v - 1 interior nodes
        e = discrete_l2_error(z, GridFunction(g, np.full(99, 0.1)))
        assert e == pytest.approx(0.1 * math.sqrt(30.0 * 99 / 100))

    def test_grid_mismatch(self):
        a = GridFunction(VelocityGrid.uniform(15.0, 100), np.zeros(99))
        b = GridFunction(VelocityGrid.uniform(16.0, 100), np.zeros(99))
        with pytest.raises(ShapeError):
            discrete_l2_error(a, b)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (3, 19), elements=st.floats(-1e3, 1e3)))
    def test_triangle(self, x):
        g = VelocityGrid.uniform(2.0, 20)
        f, h, k = (GridFunction(g, r) for r in x)
        assert discrete_l2_error(f, k) <= discrete_l2_error(f, h) + discrete_l2_error(h, k) + 1e-9
