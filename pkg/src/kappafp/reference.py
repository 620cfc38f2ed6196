"""Fine-grid finite-volume reference solution with an on-disk cache.

The reference run (v_max = 1000, N_v = 10001, dt = 1e-3 by default) is
stored as ``ref_<key>.npz`` where ``<key>`` hashes the configuration; a
sidecar ``ref_<key>.manifest`` records the configuration and the SHA-256 of
the stored arrays, which is verified on every load.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fd import fd_build, fd_initial, FDStepper
from .files import read_manifest, write_manifest
from .model import GridFunction, ModelParams, VelocityGrid

logger = logging.getLogger(__name__)

__all__ = ["ReferenceSolution", "make_reference", "default_cache_dir", "REF_DEFAULTS"]

REF_DEFAULTS = dict(v_max=1000.0, N_v=10001, dt=1e-3, u=2.0)
_FORMAT_VERSION = "1"


def default_cache_dir() -> Path:
    env = os.environ.get("KAPPAFP_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "kappafp"


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    """Nodal reference values at a set of output times."""

    params: ModelParams
    grid: VelocityGrid
    times: tuple
    values: np.ndarray  # (len(times), N_v - 1) interior values
    content_hash: str
    wall_time: float = float("nan")

    def at(self, t: float) -> GridFunction:
        for i, ti in enumerate(self.times):
            if abs(ti - t) <= 1e-9 * max(1.0, abs(t)):
                return GridFunction(self.grid, self.values[i])
        raise KeyError(f"reference has no snapshot at t={t}; available: {self.times}")


def _content_hash(nodes, times, values) -> str:
    h = hashlib.sha256()
    for arr in (nodes, np.asarray(times, float), values):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()


def _config_key(p, times, v_max, N_v, dt, u) -> tuple:
    text = (f"format={_FORMAT_VERSION};scheme=fd-implicit-euler;kappa={p.kappa!r};a={p.a!r};"
            f"v_max={float(v_max)!r};N_v={int(N_v)};dt={float(dt)!r};u={float(u)!r};"
            f"times={','.join(repr(float(t)) for t in times)}")
    return hashlib.sha256(text.encode()).hexdigest()[:20], text


def make_reference(p: ModelParams, times, v_max: float = REF_DEFAULTS["v_max"],
                   N_v: int = REF_DEFAULTS["N_v"], dt: float = REF_DEFAULTS["dt"],
                   u: float = REF_DEFAULTS["u"], cache_dir=None, use_cache: bool = True,
                   force: bool = False) -> ReferenceSolution:
    """Compute (or load from cache) the reference solution at ``times``.

    Parameters
    ----------
    p : ModelParams
        Equilibrium parameters.
    times : sequence of float
        Output times; the run ends at max(times).
    v_max, N_v, dt, u : float
        Grid half-width, number of intervals, time step and bump shift.
    cache_dir : path, optional
        Cache directory (default ``$KAPPAFP_CACHE`` or ``~/.cache/kappafp``).
    use_cache, force : bool
        Disable the cache entirely, or recompute and overwrite it.
    """
    times = tuple(sorted(set(float(t) for t in times)))
    key, text = _config_key(p, times, v_max, N_v, dt, u)
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    data_path = cache / f"ref_{key}.npz"
    man_path = cache / f"ref_{key}.manifest"
    grid = VelocityGrid.uniform(v_max, N_v)
    if use_cache and not force and data_path.exists() and man_path.exists():
        try:
            with np.load(data_path) as z:
                nodes, tt, vals = z["nodes"], z["times"], z["values"]
            man = read_manifest(man_path)
            h = _content_hash(nodes, tt, vals)
            if h == man.get("content_sha256") and np.array_equal(nodes, grid.nodes):
                logger.info("loaded reference %s", data_path)
                return ReferenceSolution(p, grid, times, vals, h,
                                         float(man.get("wall_time", "nan")))
            logger.warning("reference cache %s failed its hash check; recomputing", data_path)
        except (OSError, KeyError, ValueError) as exc:
            logger.warning("unreadable reference cache %s (%s); recomputing", data_path, exc)

    t0 = time.perf_counter()
    A = fd_build(grid, p)
    f0 = fd_initial(grid, p, u)
    steps = [int(round(t / dt)) for t in times]
    _, snaps = FDStepper(A, dt).march(f0.values, max(steps), steps)
    wall = time.perf_counter() - t0
    h = _content_hash(grid.nodes, times, snaps)
    ref = ReferenceSolution(p, grid, times, snaps, h, wall)
    if use_cache:
        cache.mkdir(parents=True, exist_ok=True)
        tmp = data_path.with_name(data_path.name + ".tmp.npz")
        np.savez(tmp, nodes=grid.nodes, times=np.array(times), values=snaps)
        os.replace(tmp, data_path)
        write_manifest(man_path, {"config": text, "content_sha256": h, "wall_time": wall})
    return ref
