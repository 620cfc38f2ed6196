"""Command-line interface: ``kappafp <subcommand> [options]``.

Subcommands
-----------
run          one scheme, error report per output time, snapshots on the reference grid
converge     time-step convergence study at one output time
reconstruct  projection error of the initial datum for several N
decay        distance to equilibrium and fitted decay rates
trace        spectral coefficients against time
make-ref     compute and cache the fine-grid reference solution

Options mirror :class:`kappafp.harness.RunConfig`.  ``--config FILE`` reads an
INI file whose ``[run]`` section (and then the section named after the scheme)
provides defaults; explicit flags override it.  Exit status: 0 on success,
2 for invalid configuration, 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ConfigurationError, DomainError, KappaFPError
from .kernels import BACKEND
from .files import read_config, write_csv, write_gnuplot, write_manifest, write_snapshot
from .harness import (RunConfig, coefficient_trace, convergence_study, decay_study, get_reference,
                      reconstruction_study, run)

logger = logging.getLogger("kappafp")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_FIELDS = {"N", "N_v", "ref_N_v"}
_BOOL_FIELDS = {"whole_line"}
_STR_FIELDS = {"scheme", "out_dir", "integrator", "cache_dir"}


def _floats(text) -> tuple:
    return tuple(float(x) for x in str(text).replace(" ", "").split(",") if x)


def _ints(text) -> tuple:
    return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x)


def _convert(key: str, value):
    if key in _INT_FIELDS:
        return int(value)
    if key in _BOOL_FIELDS:
        if isinstance(value, bool):
            return value
        v = str(value).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{key}: expected a boolean, got {value!r}")
    if key == "output_times":
        return _floats(value)
    if key in _STR_FIELDS:
        return str(value)
    return float(value)


def example_configs() -> list:
    """Names of the INI files shipped with the package."""
    return sorted(p.name for p in resources.files("kappafp.configs").iterdir()
                  if p.name.endswith(".ini"))


def _resolve_config_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    packaged = resources.files("kappafp.configs") / name
    if packaged.is_file():
        return Path(str(packaged))
    raise ConfigurationError(f"config file {name!r} not found (shipped examples: {example_configs()})")


def _add_run_options(ap: argparse.ArgumentParser, scheme_required: bool = False):
    g = ap.add_argument_group("run configuration")
    g.add_argument("--config", help="INI file ([run] plus per-scheme sections); shipped names allowed")
    g.add_argument("--scheme", choices=("fd", "fd-ref", "rc", "gs", "hermite"))
    g.add_argument("--kappa", type=float)
    g.add_argument("--a", type=float, help="regularisation parameter (GS requires a > 0)")
    g.add_argument("--u", type=float, help="bump shift of the initial datum")
    g.add_argument("--N", type=int, help="spectral truncation index")
    g.add_argument("--N-v", dest="N_v", type=int, help="FD number of intervals")
    g.add_argument("--v-max", dest="v_max", type=float,
                   help="FD domain half-width / spectral projection window")
    g.add_argument("--dt", type=float)
    g.add_argument("--T", type=float, help="final time")
    g.add_argument("--output-times", dest="output_times", help="comma separated, e.g. 0.2,2,10")
    g.add_argument("--whole-line", dest="whole_line", action="store_const", const=True,
                   help="project the initial datum over the whole real line")
    g.add_argument("--integrator", choices=("ie", "cn"))
    g.add_argument("--ref-v-max", dest="ref_v_max", type=float)
    g.add_argument("--ref-N-v", dest="ref_N_v", type=int)
    g.add_argument("--ref-dt", dest="ref_dt", type=float)
    g.add_argument("--ref-a", dest="ref_a", type=float)
    g.add_argument("--cache-dir", dest="cache_dir")
    ap.add_argument("--out", help="output directory (default: ./kappafp-<subcommand>)")


def build_config(args) -> tuple:
    """Merge config file and flags; returns (RunConfig, extra config sections)."""
    values, extra = {}, {}
    if getattr(args, "config", None):
        sections = read_config(_resolve_config_path(args.config))
        values.update(sections.get("run", {}))
        scheme = getattr(args, "scheme", None) or values.get("scheme")
        if scheme:
            values.update(sections.get(scheme, {}))
        extra = sections
    for key in _FIELDS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "out", None):
        values["out_dir"] = args.out
    unknown = set(values) - set(_FIELDS)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    if "scheme" not in values:
        raise ConfigurationError("no scheme given; pass --scheme or a config with scheme = ...")
    try:
        kw = {k: _convert(k, v) for k, v in values.items()}
    except ValueError as exc:
        raise ConfigurationError(f"invalid configuration value: {exc}") from exc
    if "output_times" not in kw and "T" in kw:
        kw["output_times"] = tuple(t for t in RunConfig.output_times if t <= kw["T"]) or (kw["T"],)
    cfg = RunConfig(**kw)
    cfg.validate()
    return cfg, extra


def _out_dir(cfg: RunConfig, sub: str) -> Path:
    out = Path(cfg.out_dir) if cfg.out_dir else Path.cwd() / f"kappafp-{sub}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, sub: str, cfg: RunConfig, **extra):
    entries = {"kappafp_version": __version__, "numpy_version": np.__version__,
               "scipy_version": scipy.__version__, "python_version": platform.python_version(),
               "banded_backend": BACKEND, "subcommand": sub}
    for k, v in dataclasses.asdict(cfg).items():
        entries[k] = ",".join(repr(float(t)) for t in v) if isinstance(v, tuple) else v
    entries.update(extra)
    return write_manifest(out / "manifest.txt", entries)


def _section(extra: dict, name: str) -> dict:
    return extra.get(name, {})


# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg, _ = build_config(args)
    out = _out_dir(cfg, "run")
    res = run(cfg)
    cols = ["t", "E_m", "E_f", "wall_time"]
    rows = [(r.t_star, r.E_m, r.E_f, r.wall_time) for r in res.reports]
    write_csv(out / "results.csv", cols, rows, [f"kappafp run scheme={cfg.scheme}"])
    for t, vals in res.snapshots.items():
        write_snapshot(out / "snapshots" / f"f_t{t:g}.csv", res.grid.interior, vals,
                       [f"scheme={cfg.scheme} t={t!r}"])
    write_gnuplot(out / "results.gp", "results.csv", "t", ["E_m", "E_f"], cols, logx=True)
    _manifest(out, "run", cfg, reference_sha256=res.reference_hash)
    for r in res.reports:
        print(f"t={r.t_star:g}  E_m={r.E_m:.4e}  E_f={r.E_f:.4e}  wall={r.wall_time:.3f}s")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg, extra = build_config(args)
    sec = _section(extra, "converge")
    dts = _floats(args.dt_list or sec.get("dt_list", "0.04,0.02,0.01,0.005"))
    t_star = args.t_star if args.t_star is not None else float(sec.get("t_star", cfg.T))
    out = _out_dir(cfg, "converge")
    self_dt = args.self_ref_dt if args.self_ref_dt is not None else sec.get("self_ref_dt")
    res = convergence_study(cfg, sorted(dts, reverse=True), t_star, workers=args.workers,
                            self_ref_dt=float(self_dt) if self_dt is not None else None)
    cols = ["dt", "E_f"]
    write_csv(out / "results.csv", cols, res.rows,
              [f"t_star={t_star!r}", f"slope={res.slope!r}", f"floor={res.floor!r}"])
    write_gnuplot(out / "results.gp", "results.csv", "dt", ["E_f"], cols, logx=True)
    _manifest(out, "converge", cfg, t_star=t_star, slope=res.slope, floor=res.floor)
    for dt, e in res.rows:
        print(f"dt={dt:g}  E_f={e:.4e}")
    print(f"slope={res.slope:.3f}  floor={res.floor:.4e}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg, extra = build_config(args)
    sec = _section(extra, "reconstruct")
    Ns = _ints(args.N_list or sec.get("N_list", "4,8,12,16"))
    out = _out_dir(cfg, "reconstruct")
    res = reconstruction_study(cfg, Ns)
    write_csv(out / "results.csv", ["N", "error"], res.rows, [res.note] if res.note else ())
    write_gnuplot(out / "results.gp", "results.csv", "N", ["error"], ["N", "error"])
    _manifest(out, "reconstruct", cfg, N_list=",".join(map(str, Ns)))
    for N, e in res.rows:
        print(f"N={N}  error={e:.4e}")
    if res.note:
        print(res.note)
    return EXIT_OK


def cmd_decay(args) -> int:
    cfg, extra = build_config(args)
    sec = _section(extra, "decay")
    win = args.window or sec.get("window")
    window = _floats(win) if win else None
    if window is not None and len(window) != 2:
        raise ConfigurationError("--window takes two values lo,hi")
    out = _out_dir(cfg, "decay")
    res = decay_study(cfg, window)
    write_csv(out / "results.csv", ["t", "distance"], zip(res.times, res.norms),
              [f"window={res.window[0]!r},{res.window[1]!r}",
               f"loglog_slope={res.loglog_slope!r}", f"rate={res.rate!r}",
               f"loglin_r2={res.loglin_r2!r}", f"saturation_time={res.saturation_time!r}"])
    write_gnuplot(out / "results.gp", "results.csv", "t", ["distance"], ["t", "distance"],
                  logx=cfg.scheme == "fd")
    _manifest(out, "decay", cfg, loglog_slope=res.loglog_slope, rate=res.rate,
              loglin_r2=res.loglin_r2)
    print(f"window=[{res.window[0]:g}, {res.window[1]:g}]  log-log slope={res.loglog_slope:.3f} "
          f"(R2={res.loglog_r2:.4f})  rate={res.rate:.4f} (R2={res.loglin_r2:.4f})")
    if res.saturation_time is not None:
        print(f"saturation onset t={res.saturation_time:g}")
    return EXIT_OK


def cmd_trace(args) -> int:
    cfg, _ = build_config(args)
    out = _out_dir(cfg, "trace")
    res = coefficient_trace(cfg, stride=args.stride)
    cols = ["t"] + [f"c{k}" for k in range(res.coeffs.shape[1])]
    write_csv(out / "results.csv", cols, np.column_stack([res.times, res.coeffs]),
              [f"scheme={cfg.scheme} N={cfg.N}"])
    write_gnuplot(out / "results.gp", "results.csv", "t", cols[1:4], cols, logy=False)
    _manifest(out, "trace", cfg)
    last = res.coeffs[-1]
    print(f"t={res.times[-1]:g}  " + "  ".join(f"c{k}={c:.5g}" for k, c in enumerate(last[:6])))
    return EXIT_OK


def cmd_make_ref(args) -> int:
    if args.scheme is None and not args.config:
        args.scheme = "fd-ref"
    cfg, _ = build_config(args)
    cfg = cfg.replace(scheme="fd-ref")
    t0 = time.perf_counter()
    ref = get_reference(cfg)
    print(f"reference kappa={cfg.kappa:g} a={cfg.a:g} v_max={cfg.ref_v_max:g} "
          f"N_v={cfg.ref_N_v} dt={cfg.ref_dt:g} times={list(ref.times)}")
    print(f"sha256={ref.content_hash}  compute={ref.wall_time:.2f}s  "
          f"elapsed={time.perf_counter() - t0:.2f}s")
    if cfg.out_dir:
        out = _out_dir(cfg, "make-ref")
        for t in ref.times:
            write_snapshot(out / "snapshots" / f"f_t{t:g}.csv", ref.grid.interior, ref.at(t).values,
                           [f"reference t={t!r}"])
        _manifest(out, "make-ref", cfg, reference_sha256=ref.content_hash)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kappafp",
                                 description="Spectral and finite-volume solvers for the "
                                             "kappa Fokker-Planck equation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scheme and report errors")
    _add_run_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="time-step convergence study")
    _add_run_options(p)
    p.add_argument("--dt-list", help="comma separated time steps")
    p.add_argument("--t-star", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--self-ref-dt", dest="self_ref_dt", type=float,
                   help="FD only: compare with the same grid at this time step")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("reconstruct", help="projection error of the initial datum")
    _add_run_options(p)
    p.add_argument("--N-list", dest="N_list", help="comma separated truncation indices")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("decay", help="distance to equilibrium and decay rates")
    _add_run_options(p)
    p.add_argument("--window", help="fit window lo,hi")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("trace", help="spectral coefficients against time")
    _add_run_options(p)
    p.add_argument("--stride", type=int, help="sample every STRIDE steps")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("make-ref", help="compute and cache the reference solution")
    _add_run_options(p)
    p.set_defaults(func=cmd_make_ref)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DomainError, FileNotFoundError) as exc:
        print(f"kappafp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KappaFPError as exc:
        print(f"kappafp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
