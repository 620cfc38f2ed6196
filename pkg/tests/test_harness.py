"""Run configuration, scheme drivers and the convergence, reconstruction and decay studies."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kappafp.errors import ConfigurationError
from kappafp.harness import (RunConfig, coefficient_trace, convergence_study, decay_study,
                             fit_slope, reconstruction_study, run)

GS31 = RunConfig("gs", kappa=31.0, a=1e-3, N=10)
RC3 = RunConfig("rc", kappa=3.0, N=8)


class TestRunConfig:
    def test_defaults(self):
        c = RunConfig("rc")
        assert (c.kappa, c.a, c.u, c.N, c.dt, c.T) == (3.0, 0.0, 2.0, 8, 0.01, 10.0)
        assert c.output_times == (0.2, 2.0, 10.0)
        assert c.nsteps == 1000 and c.step_of(0.2) == 20

    def test_output_times_sorted(self):
        assert RunConfig("fd", output_times=(2, 0.2, 2)).output_times == (0.2, 2.0)

    @pytest.mark.parametrize("cfg, hint", [
        (RunConfig("rc", kappa=31.0, a=1e-3), "GS"),
        (RunConfig("rc", kappa=4.0), "GS"),
        (RunConfig("gs", kappa=31.0, a=0.0), "a > 0"),
        (RunConfig("rc", N=5), "even"),
        (RunConfig("fd", dt=0.03), "multiple of dt"),
        (RunConfig("fd", output_times=(11.0,)), "outside"),
        (RunConfig("nope"), "choose from"),
        (RunConfig("rc", integrator="rk4"), "integrator"),
    ])
    def test_validate_hints(self, cfg, hint):
        with pytest.raises(ConfigurationError, match=hint):
            cfg.validate()

    def test_hermite_ignores_kappa(self):
        RunConfig("hermite", kappa=0.1, a=-5.0).validate()


class TestRun:
    def test_gs_table_t10(self, ref31):
        res = run(GS31.replace(output_times=(10.0,)), ref31)
        r = res.reports[0]
        assert r.E_m <= 1e-12
        assert r.E_f == pytest.approx(1.2e-3, rel=0.1)
        assert res.coefficients[10.0][0] == pytest.approx(1.000525271260958, rel=1e-10)

    def test_rc_table_t02(self, ref3):
        r = run(RC3.replace(T=0.2, output_times=(0.2,)), ref3).reports[0]
        assert r.E_f == pytest.approx(3.2e-2, rel=0.5)
        assert r.E_m == pytest.approx(4.75e-5, rel=0.01)

    def test_hermite_exact(self):
        res = run(RunConfig("hermite", N=40, T=2.0, output_times=(0.2, 2.0), ref_N_v=2001,
                            ref_v_max=50.0))
        for r in res.reports:
            assert r.E_f < 1e-8 and r.E_m < 1e-12
        assert res.reference_hash == "analytic"

    def test_fd_reference_self(self, ref3, cache_dir):
        res = run(RunConfig("fd-ref", T=0.2, output_times=(0.2,), cache_dir=cache_dir))
        assert res.reports[0].E_f == 0.0
        assert res.reports[0].E_m < 1e-4

    def test_fd_run(self, ref3):
        res = run(RunConfig("fd", N_v=600, v_max=30.0, T=2.0, output_times=(0.2, 2.0)), ref3)
        for r in res.reports:
            assert 0 < r.E_f < 1e-2
            assert r.E_m >= 0
        assert res.snapshots[2.0].size == ref3.grid.interior.size

    def test_reports_nonnegative(self, ref3):
        res = run(RC3.replace(T=2.0, output_times=(0.0, 2.0)), ref3) if 0.0 in ref3.times else \
            run(RC3.replace(T=2.0, output_times=(0.2, 2.0)), ref3)
        assert all(r.E_m >= 0 and r.E_f >= 0 and r.wall_time >= 0 for r in res.reports)


class TestStudies:
    @settings(max_examples=30, deadline=None)
    @given(slope=st.floats(-6, 6).filter(lambda s: abs(s) >= 0.1), c=st.floats(-3, 3))
    def test_fit_slope(self, slope, c):
        x = np.geomspace(0.01, 1, 7)
        s, r2 = fit_slope(x, math.exp(c) * x ** slope)
        assert s == pytest.approx(slope, abs=1e-9)
        assert r2 == pytest.approx(1.0, abs=1e-9)

    def test_dt_list_must_descend(self):
        with pytest.raises(ConfigurationError):
            convergence_study(RC3, [0.01, 0.02])

    def test_self_reference_fd_only(self):
        with pytest.raises(ConfigurationError):
            convergence_study(RC3, [0.02, 0.01], self_ref_dt=1e-4)

    def test_gs_first_order(self, ref31):
        res = convergence_study(GS31.replace(N=16), [0.4, 0.2, 0.1, 0.05], t_star=2.0,
                                reference=ref31)
        assert 0.8 <= res.slope <= 1.2
        e = [r[1] for r in res.rows]
        assert e[0] / e[1] == pytest.approx(2.0, rel=0.2)

    def test_gs_saturation_floor(self, ref31):
        res = convergence_study(GS31, [1.0, 0.5, 0.1, 0.01], t_star=10.0, reference=ref31)
        assert res.floor == pytest.approx(1.212e-3, rel=0.05)
        assert len(res.fitted) == 2  # saturated after the first refinement

    def test_parallel_matches_serial(self, ref3):
        a = convergence_study(RC3, [0.04, 0.02], t_star=0.2, reference=ref3, workers=1)
        b = convergence_study(RC3, [0.04, 0.02], t_star=0.2, reference=ref3, workers=2)
        assert a.rows == b.rows

    def test_reconstruction(self):
        rc = reconstruction_study(RC3, [8, 16]).rows
        assert rc[1][1] == pytest.approx(1.6e-3, rel=0.5)
        assert rc[1][1] < rc[0][1]
        gs = reconstruction_study(GS31, [6, 12]).rows
        assert gs[1][1] == pytest.approx(2.6e-3, rel=0.5)

    def test_reconstruction_breakdown_note(self):
        res = reconstruction_study(RunConfig("gs", kappa=3.0, a=1e-3), [4, 60])
        assert "largest usable N is 40" in res.note
        assert math.isfinite(res.rows[0][1]) and math.isnan(res.rows[1][1])

    def test_reconstruction_rejects_fd(self):
        with pytest.raises(ConfigurationError):
            reconstruction_study(RunConfig("fd"), [4])

    def test_hermite_decay_rate(self):
        res = decay_study(RunConfig("hermite", N=30, T=4.0, output_times=(4.0,)))
        # two-bump data: alpha_1 = 0, so the slowest mode is k = 2
        assert res.rate == pytest.approx(-2.0, abs=1e-3)
        assert res.loglin_r2 > 0.9999

    def test_equilibrium_decay_flat(self, monkeypatch):
        from kappafp import harness
        from kappafp.model import f_kappa_a
        monkeypatch.setattr(harness, "_initial", lambda cfg: (lambda v: f_kappa_a(v, cfg.params)))
        res = decay_study(GS31.replace(T=2.0, output_times=(2.0,)))
        assert np.max(res.norms) < 1e-12

    def test_gs_decay_exponential(self):
        res = decay_study(GS31.replace(N=16), window=(1.0, 10.0))
        assert res.rate < 0 and res.loglin_r2 > 0.99

    def test_trace_rc(self):
        tr = coefficient_trace(RC3.replace(T=2.0, output_times=(2.0,)), stride=20)
        assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(2.0)
        assert tr.coeffs.shape == (11, 5)

    def test_trace_gs(self):
        tr = coefficient_trace(GS31)
        assert tr.coeffs[-1, 0] == pytest.approx(1.000525271260958, rel=1e-10)
        assert np.abs(tr.coeffs[-1, 1:]).max() < 1e-3
        # smooth data: magnitudes decrease with index at fixed t (even indices)
        c = np.abs(tr.coeffs[10, 2::2])
        assert np.all(np.diff(c) < 0)

    def test_trace_requires_spectral(self):
        with pytest.raises(ConfigurationError):
            coefficient_trace(RunConfig("fd"))
