"""Compare the compiled banded kernels with the scipy/LAPACK fallback.

Workloads
---------
fd-ref   reference-size tridiagonal march (N_v = 10001, 10000 steps)
rc       penta-diagonal RC march (N = 20, 10^5 steps)
solve    repeated single solves with residual checks (N_v = 10001)

Usage: python3 benchmarks/bench_kernels.py [--repeat R] [--steps S]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from kappafp.fd import FDStepper, fd_build, fd_initial
from kappafp.kernels import BandedLU, available_backends
from kappafp.model import ModelParams, VelocityGrid, two_bump_init
from kappafp.rc import _system, rc_build_matrix, rc_project


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_fd(backend, steps, repeat):
    p = ModelParams(3.0)
    grid = VelocityGrid.uniform(1000.0, 10001)
    A = fd_build(grid, p)
    f0 = fd_initial(grid, p).values
    st = FDStepper(A, 1e-3, backend=backend)
    return _best(lambda: st.march(f0, steps, [steps])[0], repeat)


def bench_rc(backend, steps, repeat):
    p = ModelParams(3.0)
    M = rc_build_matrix(20, p)
    s0 = rc_project(lambda v: two_bump_init(v, p), 20, p)
    lu = BandedLU(_system(M, 1e-4).ab, 2, 2, backend=backend)
    return _best(lambda: lu.march(s0.coeffs, steps, [steps])[0], repeat)


def bench_solve(backend, n_solves, repeat):
    p = ModelParams(3.0)
    grid = VelocityGrid.uniform(1000.0, 10001)
    st = FDStepper(fd_build(grid, p), 1e-3, backend=backend)
    b = fd_initial(grid, p).values

    def work():
        x = b
        for _ in range(n_solves):
            x = st.step(x)
        return x

    return _best(work, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--steps", type=int, default=10000)
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {backends}")
    rows = []
    for name, fn, n in (("fd-ref", bench_fd, args.steps), ("rc", bench_rc, 10 * args.steps),
                        ("solve", bench_solve, max(1, args.steps // 50))):
        res = {}
        for be in backends:
            t, x = fn(be, n, args.repeat)
            res[be] = (t, x)
        if len(res) == 2:
            dx = float(np.max(np.abs(res["compiled"][1] - res["python"][1])))
            ratio = res["python"][0] / res["compiled"][0]
            rows.append((name, res["compiled"][0], res["python"][0], ratio, dx))
        else:
            (be, (t, _)), = res.items()
            rows.append((name, t if be == "compiled" else float("nan"),
                         t if be == "python" else float("nan"), float("nan"), float("nan")))
    print(f"{'workload':<8} {'compiled [s]':>13} {'python [s]':>11} {'speedup':>8} {'max |dx|':>10}")
    for name, tc, tp, r, dx in rows:
        print(f"{name:<8} {tc:13.4f} {tp:11.4f} {r:8.2f} {dx:10.2e}")


if __name__ == "__main__":
    main()
