"""Experiment orchestration: runs, error reports and parameter studies.

Every scheme starts from the two-bump datum 0.5[f_kappa(v+u) + f_kappa(v-u)]
(a Maxwellian two-bump for the Hermite scheme), advances to the final time and
is compared with the fine-grid reference on the reference nodes.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import fd as fdm
from . import gs as gsm
from . import hermite as hm
from . import rc as rcm
from .errors import BreakdownError, ConfigurationError
from .model import (GridFunction, ModelParams, VelocityGrid, discrete_l2_error, f_kappa_a,
                    maxwellian, stationary_state, two_bump_init)
from .reference import REF_DEFAULTS, ReferenceSolution, make_reference

logger = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "ErrorReport",
    "RunResult",
    "run",
    "convergence_study",
    "reconstruction_study",
    "decay_study",
    "coefficient_trace",
    "get_reference",
    "fit_slope",
    "SCHEMES",
]

SCHEMES = ("fd", "fd-ref", "rc", "gs", "hermite")


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one simulation.

    For the spectral schemes ``v_max`` bounds the projection integral of the
    initial datum (``whole_line=True`` integrates over R instead); for FD it
    is the truncation of the velocity domain with ``N_v`` intervals.  The
    reference solves the unregularised problem (``ref_a = 0``) by default, so
    that GS runs are measured against the equation they approximate.
    """

    scheme: str
    kappa: float = 3.0
    a: float = 0.0
    u: float = 2.0
    N: int = 8
    N_v: int = 100
    v_max: float = 15.0
    dt: float = 0.01
    T: float = 10.0
    output_times: tuple = (0.2, 2.0, 10.0)
    out_dir: str | None = None
    whole_line: bool = False
    integrator: str = "ie"
    ref_v_max: float = REF_DEFAULTS["v_max"]
    ref_N_v: int = REF_DEFAULTS["N_v"]
    ref_dt: float = REF_DEFAULTS["dt"]
    ref_a: float = 0.0
    cache_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "output_times",
                           tuple(sorted(set(float(t) for t in self.output_times))))

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    @property
    def params(self) -> ModelParams:
        if self.scheme == "hermite":
            return ModelParams(kappa=1e300, a=0.0)
        return ModelParams(self.kappa, self.a)

    @property
    def nsteps(self) -> int:
        return int(round(self.T / self.dt))

    def step_of(self, t: float) -> int:
        return int(round(t / self.dt))

    def validate(self) -> None:
        """Raise ConfigurationError with a remediation hint on invalid input."""
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.dt > 0 or not self.T > 0:
            raise ConfigurationError("dt and T must be positive")
        for t in self.output_times:
            if t < 0 or t > self.T * (1 + 1e-12):
                raise ConfigurationError(f"output time {t} outside [0, T={self.T}]")
            if abs(t / self.dt - round(t / self.dt)) > 1e-6:
                raise ConfigurationError(f"output time {t} is not a multiple of dt={self.dt}")
        if self.integrator not in ("ie", "cn"):
            raise ConfigurationError("integrator must be 'ie' or 'cn'")
        if self.scheme == "rc":
            rcm.check_rc_params(self.params)
            if self.N < 0 or self.N % 2:
                raise ConfigurationError(f"RC truncation N must be even, got {self.N}")
        elif self.scheme == "gs":
            if not self.a > 0:
                raise ConfigurationError(
                    "GS scheme requires a > 0 (e.g. a = 1e-3); use RC for a = 0 and odd kappa")
            ModelParams(self.kappa, self.a)
        elif self.scheme in ("fd", "fd-ref"):
            ModelParams(self.kappa, self.a)
            if self.N_v < 2:
                raise ConfigurationError("N_v must be at least 2")
        if self.N < 0:
            raise ConfigurationError("N must be non-negative")


@dataclass(frozen=True)
class ErrorReport:
    """Errors of one run at one output time."""

    t_star: float
    E_m: float
    E_f: float
    wall_time: float


@dataclass
class RunResult:
    config: RunConfig
    reports: list
    snapshots: dict  # t -> values on the reference interior nodes
    grid: VelocityGrid
    coefficients: dict = field(default_factory=dict)  # t -> coefficient vector
    masses: dict = field(default_factory=dict)
    wall_time: float = 0.0
    reference_hash: str = ""


# ---------------------------------------------------------------------------
# reference handling

def get_reference(cfg: RunConfig, times=None) -> ReferenceSolution | None:
    """Reference solution matching ``cfg`` (None for the Hermite scheme)."""
    if cfg.scheme == "hermite":
        return None
    times = cfg.output_times if times is None else times
    a = cfg.a if cfg.scheme == "fd-ref" else cfg.ref_a
    return make_reference(ModelParams(cfg.kappa, a), times, v_max=cfg.ref_v_max,
                          N_v=cfg.ref_N_v, dt=cfg.ref_dt, u=cfg.u, cache_dir=cfg.cache_dir)


def _hermite_reference(cfg: RunConfig) -> tuple:
    grid = VelocityGrid.uniform(cfg.ref_v_max, cfg.ref_N_v)
    vals = np.array([hm.hermite_exact_two_bump(grid.interior, t, cfg.u) for t in cfg.output_times])
    return grid, vals


# ---------------------------------------------------------------------------
# scheme drivers: each returns (states_by_step, mass_fn, eval_fn, coeff_fn, setup)

def _initial(cfg: RunConfig) -> Callable:
    p = cfg.params
    if cfg.scheme == "hermite":
        return lambda v: 0.5 * (maxwellian(v - cfg.u) + maxwellian(v + cfg.u))
    return lambda v: two_bump_init(v, p, cfg.u)


def _window(cfg: RunConfig):
    return None if cfg.whole_line else cfg.v_max


def _drive_rc(cfg, steps):
    p = cfg.params
    s0 = rcm.rc_project(_initial(cfg), cfg.N, p, v_cut=_window(cfg))
    M = rcm.rc_build_matrix(cfg.N, p)
    _, snaps = rcm.rc_evolve(s0, M, cfg.dt, cfg.nsteps, steps, method=cfg.integrator)
    return (snaps,
            lambda s: rcm.rc_mass(s, p),
            lambda s, v: rcm.rc_reconstruct(s, v, p),
            lambda s: s.coeffs)


def _gs_setup(cfg):
    p = cfg.params
    tables = gsm.gs_modified_chebyshev(2 * cfg.N + 1, p)
    theta = gsm.gs_stiffness(cfg.N, tables, p)
    return p, tables, theta


def _drive_gs(cfg, steps):
    p, tables, theta = _gs_setup(cfg)
    s0 = gsm.gs_project(_initial(cfg), cfg.N, tables, v_cut=_window(cfg))
    if cfg.integrator == "cn":
        raise ConfigurationError("the GS scheme is implemented with implicit Euler only")
    _, snaps = gsm.gs_evolve(s0, theta, tables, cfg.dt, cfg.nsteps, steps)
    return (snaps,
            lambda s: gsm.gs_mass(s, tables),
            lambda s, v: gsm.gs_reconstruct(s, v, tables, p),
            lambda s: s.coeffs)


def _drive_hermite(cfg, steps):
    s0 = hm.hermite_project(_initial(cfg), cfg.N)
    snaps = {k: hm.hermite_evolve(s0, k * cfg.dt) for k in steps}
    return (snaps,
            lambda s: float(s.coeffs[0]),
            lambda s, v: hm.hermite_reconstruct(s, v),
            lambda s: s.coeffs)


def _drive_fd(cfg, steps):
    p = cfg.params
    grid = VelocityGrid.uniform(cfg.v_max, cfg.N_v)
    if cfg.integrator != "ie":
        raise ConfigurationError("the FD scheme is implemented with implicit Euler only")
    A = fdm.fd_build(grid, p)
    f0 = fdm.fd_initial(grid, p, cfg.u)
    _, snaps = fdm.fd_evolve(f0, A, cfg.dt, cfg.nsteps, steps)

    def evaluate(f, v):
        return np.interp(v, grid.nodes, f.full(), left=0.0, right=0.0)

    return snaps, fdm.fd_mass, evaluate, lambda f: f.values


_DRIVERS = {"rc": _drive_rc, "gs": _drive_gs, "hermite": _drive_hermite, "fd": _drive_fd}


def run(cfg: RunConfig, reference: ReferenceSolution | None = None) -> RunResult:
    """Execute one configuration and compare with the reference at each output time.

    Returns
    -------
    RunResult
        One :class:`ErrorReport` per output time, reconstructions on the
        reference interior nodes, coefficients and masses.
    """
    cfg.validate()
    if cfg.scheme == "fd-ref":
        t0 = time.perf_counter()
        ref = reference or get_reference(cfg)
        wall = time.perf_counter() - t0
        reps = []
        snaps = {}
        for t in cfg.output_times:
            f = ref.at(t)
            m = fdm.fd_mass(f)
            reps.append(ErrorReport(t, abs(m - 1.0), 0.0, ref.wall_time))
            snaps[t] = f.values
        return RunResult(cfg, reps, snaps, ref.grid, wall_time=wall, reference_hash=ref.content_hash)

    if cfg.scheme == "hermite":
        grid, ref_vals = _hermite_reference(cfg)
        ref_hash = "analytic"
    else:
        ref = reference or get_reference(cfg)
        grid = ref.grid
        ref_vals = np.array([ref.at(t).values for t in cfg.output_times])
        ref_hash = ref.content_hash
    steps = [cfg.step_of(t) for t in cfg.output_times]
    t0 = time.perf_counter()
    snaps, mass_fn, eval_fn, coeff_fn = _DRIVERS[cfg.scheme](cfg, steps)
    wall = time.perf_counter() - t0

    reports, out, coeffs, masses = [], {}, {}, {}
    for i, (t, k) in enumerate(zip(cfg.output_times, steps)):
        s = snaps[k]
        vals = np.asarray(eval_fn(s, grid.interior), dtype=float)
        m = mass_fn(s)
        E_f = discrete_l2_error(GridFunction(grid, ref_vals[i]), GridFunction(grid, vals))
        reports.append(ErrorReport(t, abs(m - 1.0), E_f, wall))
        out[t] = vals
        coeffs[t] = np.asarray(coeff_fn(s)).copy()
        masses[t] = m
    return RunResult(cfg, reports, out, grid, coeffs, masses, wall, ref_hash)


# ---------------------------------------------------------------------------
# studies

def fit_slope(x, y, log_x: bool = True):
    """Least-squares slope of log(y) against log(x) (or x); returns (slope, R^2)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    X = np.log(x) if log_x else x
    Y = np.log(y)
    if X.size < 2:
        return float("nan"), float("nan")
    A = np.vstack([X, np.ones_like(X)]).T
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((Y - pred) ** 2))
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


@dataclass
class ConvergenceResult:
    t_star: float
    rows: list  # (dt, E_f)
    slope: float
    floor: float
    fitted: list  # dt values used in the slope fit


def _conv_one(args):
    cfg, ref = args
    return run(cfg, ref).reports[-1].E_f


def _fd_solution(cfg: RunConfig) -> GridFunction:
    grid = VelocityGrid.uniform(cfg.v_max, cfg.N_v)
    f0 = fdm.fd_initial(grid, cfg.params, cfg.u)
    f, _ = fdm.fd_evolve(f0, fdm.fd_build(grid, cfg.params), cfg.dt, cfg.nsteps)
    return f


def _self_conv_one(args):
    cfg, ref = args
    return discrete_l2_error(ref, _fd_solution(cfg))


def convergence_study(template: RunConfig, dt_list: Sequence[float], t_star: float | None = None,
                      workers: int = 1, saturation_order: float = 0.5,
                      reference: ReferenceSolution | None = None,
                      self_ref_dt: float | None = None) -> ConvergenceResult:
    """Rerun ``template`` over ``dt_list`` and fit the log-log slope of E_f(t*).

    Starting from the largest dt, points are kept while each refinement
    lowers the error at an observed order of at least ``saturation_order``;
    the first point that fails marks the saturation floor and it and all
    smaller dt are excluded from the fit.

    Parameters
    ----------
    self_ref_dt : float, optional
        FD only: measure errors against the same grid advanced with this
        (much smaller) time step instead of the fine-grid reference, which
        isolates the time-discretisation error.
    """
    dts = [float(d) for d in dt_list]
    if any(a < b for a, b in zip(dts, dts[1:])):
        raise ConfigurationError("dt_list must be sorted in descending order")
    t_star = template.T if t_star is None else float(t_star)
    cfgs = [template.replace(dt=d, T=t_star, output_times=(t_star,)) for d in dts]
    if self_ref_dt is not None:
        if template.scheme != "fd":
            raise ConfigurationError("a self reference is only available for the FD scheme")
        ref = _fd_solution(cfgs[0].replace(dt=self_ref_dt))
        errs = _pmap(_self_conv_one, [(c, ref) for c in cfgs], workers)
    else:
        ref = reference if reference is not None else get_reference(cfgs[0])
        errs = _pmap(_conv_one, [(c, ref) for c in cfgs], workers)
    n_use = len(dts)
    for i in range(1, len(dts)):
        order = math.log(errs[i - 1] / errs[i]) / math.log(dts[i - 1] / dts[i]) if errs[i] > 0 else math.inf
        if order < saturation_order:
            n_use = i
            break
    n_use = max(n_use, 2)
    slope, _ = fit_slope(dts[:n_use], errs[:n_use])
    return ConvergenceResult(t_star, list(zip(dts, errs)), slope, min(errs), dts[:n_use])


@dataclass
class ReconstructionResult:
    rows: list  # (N, error)
    note: str = ""


def reconstruction_study(template: RunConfig, N_list: Sequence[int]) -> ReconstructionResult:
    """Project the initial datum for each N and measure the discrete L2 error on the reference grid."""
    grid = VelocityGrid.uniform(template.ref_v_max, template.ref_N_v)
    f_in = _initial(template)
    exact = f_in(grid.interior)
    p = template.params
    rows, note = [], ""
    tables = None
    if template.scheme == "gs":
        try:
            tables = gsm.gs_modified_chebyshev(max(N_list), p)
        except BreakdownError as exc:
            note = f"breakdown: largest usable N is {exc.max_usable_N}"
            tables = gsm.gs_modified_chebyshev(exc.max_usable_N, p)
    for N in N_list:
        cfg = template.replace(N=N)
        cfg.validate()
        if template.scheme == "rc":
            s = rcm.rc_project(f_in, N, p, v_cut=_window(cfg))
            rec = rcm.rc_reconstruct(s, grid.interior, p)
        elif template.scheme == "gs":
            if N > tables.N:
                rows.append((N, float("nan")))
                continue
            s = gsm.gs_project(f_in, N, tables, v_cut=_window(cfg))
            rec = gsm.gs_reconstruct(s, grid.interior, tables, p)
        elif template.scheme == "hermite":
            s = hm.hermite_project(f_in, N)
            rec = hm.hermite_reconstruct(s, grid.interior)
        else:
            raise ConfigurationError("reconstruction study applies to spectral schemes only")
        rows.append((N, discrete_l2_error(GridFunction(grid, exact), GridFunction(grid, rec))))
    return ReconstructionResult(rows, note)


@dataclass
class DecayResult:
    times: np.ndarray
    norms: np.ndarray
    window: tuple
    loglog_slope: float
    loglog_r2: float
    rate: float  # slope of log(norm) against t
    loglin_r2: float
    saturation_time: float | None
    squared_loglog_slope: float  # same fit for the squared norm (diagnostic)


def _decay_series(cfg: RunConfig, stride: int):
    p = cfg.params
    steps = list(range(0, cfg.nsteps + 1, stride))
    if cfg.scheme == "fd":
        grid = VelocityGrid.uniform(cfg.v_max, cfg.N_v)
        A = fdm.fd_build(grid, p)
        f0 = fdm.fd_initial(grid, p, cfg.u)
        _, snaps = fdm.fd_evolve(f0, A, cfg.dt, cfg.nsteps, steps)
        f_inf = stationary_state(p, 1.0)
        v = grid.interior
        weight = grid.cell_lengths / f_kappa_a(v, p)
        finf = f_inf(v)
        norms = [math.sqrt(float(np.dot(weight, (snaps[k].values - finf) ** 2))) for k in steps]
    elif cfg.scheme == "gs":
        _, tables, theta = _gs_setup(cfg)
        s0 = gsm.gs_project(_initial(cfg), cfg.N, tables, v_cut=_window(cfg))
        _, snaps = gsm.gs_evolve(s0, theta, tables, cfg.dt, cfg.nsteps, steps)
        n_inf = s0.coeffs[0]  # alpha_0 is conserved exactly
        g = tables.gamma[: cfg.N + 1]
        norms = []
        for k in steps:
            d = snaps[k].coeffs.copy()
            d[0] -= n_inf
            norms.append(math.sqrt(float(np.dot(g, d * d))))
    elif cfg.scheme == "rc":
        s0 = rcm.rc_project(_initial(cfg), cfg.N, p, v_cut=_window(cfg))
        M = rcm.rc_build_matrix(cfg.N, p)
        _, snaps = rcm.rc_evolve(s0, M, cfg.dt, cfg.nsteps, steps, method=cfg.integrator)
        a_inf = rcm.rc_project(lambda v: f_kappa_a(v, p), cfg.N, p).coeffs
        c = rcm.rc_norm_consts(a_inf.size)
        norms = [math.sqrt(float(np.dot(c, (snaps[k].coeffs - a_inf) ** 2))) for k in steps]
    elif cfg.scheme == "hermite":
        s0 = hm.hermite_project(_initial(cfg), cfg.N)
        norms = [hm.hermite_distance(hm.hermite_evolve(s0, k * cfg.dt)) for k in steps]
    else:
        raise ConfigurationError("decay study needs fd, rc, gs or hermite")
    return np.array(steps) * cfg.dt, np.array(norms)


def decay_study(cfg: RunConfig, window: tuple | None = None, stride: int | None = None) -> DecayResult:
    """Distance to equilibrium in the 1/f_eq-weighted norm and fitted decay rates.

    The fit window defaults to [T/3, T] and is clipped at the saturation onset,
    taken as the time of the minimum of the distance curve when that minimum
    is reached before T.
    """
    cfg.validate()
    if stride is None:
        stride = max(1, int(round(0.1 / cfg.dt)))
    t, nrm = _decay_series(cfg, stride)
    i_min = int(np.argmin(nrm))
    t_sat = float(t[i_min]) if i_min < t.size - 1 else None
    lo, hi = window if window is not None else (cfg.T / 3.0, cfg.T)
    if t_sat is not None:
        hi = min(hi, t_sat)
    mask = (t >= lo) & (t <= hi) & (t > 0) & (nrm > 0)
    slope, r2 = fit_slope(t[mask], nrm[mask])
    rate, r2lin = fit_slope(t[mask], nrm[mask], log_x=False)
    sq_slope, _ = fit_slope(t[mask], nrm[mask] ** 2)
    return DecayResult(t, nrm, (lo, hi), slope, r2, rate, r2lin, t_sat, sq_slope)


@dataclass
class TraceResult:
    times: np.ndarray
    coeffs: np.ndarray  # (len(times), N+1)


def coefficient_trace(cfg: RunConfig, stride: int | None = None) -> TraceResult:
    """Spectral coefficients sampled every ``stride`` steps (default 0.1 time units)."""
    cfg.validate()
    if cfg.scheme not in ("rc", "gs", "hermite"):
        raise ConfigurationError("coefficient trace needs a spectral scheme (rc, gs, hermite)")
    if stride is None:
        stride = max(1, int(round(0.1 / cfg.dt)))
    steps = sorted(set(range(0, cfg.nsteps + 1, stride)) | {cfg.nsteps})
    snaps, *_ = _DRIVERS[cfg.scheme](cfg, steps)
    return TraceResult(np.array(steps) * cfg.dt, np.array([snaps[k].coeffs for k in steps]))
