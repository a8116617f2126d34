"""Compare the compiled and pure-Python kernel backends.

Each kernel is called with identical inputs on both backends; the script
reports median wall time per call, the speedup, and the largest output
difference. An end-to-end solve is timed in subprocesses with and without
``TRFDS_PURE_PYTHON=1``.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from trfds import _pykernels
from trfds._pykernels import MODEL_PREDPREY, SET_BALL, SET_BOX

try:
    from trfds import _ckernels
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")


def kernel_cases():
    rng = np.random.default_rng(0)
    n = 6
    A = rng.standard_normal((n, n))
    H = A @ A.T + np.eye(n)
    g = rng.standard_normal(n)
    lo, hi = -rng.uniform(0.1, 1.0, n), rng.uniform(0.1, 1.0, n)
    step = 1.0 / float(np.linalg.norm(H, 2))
    v = 3 * rng.standard_normal(n)
    center = 0.3 * np.ones(n)
    pp = np.array([0.723, 447.0, 2.88, 21.9, 5.54, 4.99])
    times = 0.5 * np.arange(71)
    return {
        "dykstra (box, n=6)": lambda k: k.dykstra(v, 0.8, SET_BOX, lo, hi, 0.0, 1e-12, 5000)[0],
        "dykstra (ball, n=6)": lambda k: k.dykstra(v, 0.8, SET_BALL, center, center, 0.9, 1e-12, 5000)[0],
        "fista (box, n=6)": lambda k: k.fista(H, g, np.zeros(n), 0.8, SET_BOX, lo, hi, 0.0, step, 1e-10, 500,
                                              1e-12, 5000)[0],
        "dopri5 (predator-prey)": lambda k: k.dopri5(MODEL_PREDPREY, pp, np.array([400.0, 20.0]), times,
                                                     1e-8, 1e-10, math.inf, 100000)[0],
    }


def median_time(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return float(np.median(timeit.repeat(fn, number=number, repeat=repeat))) / number


def solve_time(pure):
    env = dict(os.environ)
    env.pop("TRFDS_PURE_PYTHON", None)
    if pure:
        env["TRFDS_PURE_PYTHON"] = "1"
    code = ("import time; from trfds import registry, kernels; from trfds.driver import default_config, solve; "
            "p = registry.more_wild('mw_rosenbrock', box=(0.1, 20.0)); "
            "cfg = default_config(p.n, mode='unrelaxable'); t = time.perf_counter(); r = solve(p, cfg); "
            "print(kernels.BACKEND, time.perf_counter() - t, repr(r.f_best))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    backend, seconds, f_best = out.split()
    return backend, float(seconds), float(f_best)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    print(f"{'kernel':<26}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, call in kernel_cases().items():
        diff = float(np.max(np.abs(call(_pykernels) - call(_ckernels))))
        t_py = median_time(lambda: call(_pykernels), args.repeat)
        t_c = median_time(lambda: call(_ckernels), args.repeat)
        print(f"{name:<26}{t_py:>12.3e}{t_c:>12.3e}{t_py / t_c:>10.1f}{diff:>13.2e}")

    rows = [solve_time(pure) for pure in (True, False)]
    print()
    print(f"{'end-to-end solve':<26}{'backend':>12}{'seconds':>12}{'f_best':>24}")
    for backend, seconds, f_best in rows:
        print(f"{'mw_rosenbrock, box':<26}{backend:>12}{seconds:>12.3f}{f_best:>24.16e}")
    print(f"speedup {rows[0][1] / rows[1][1]:.1f}x")


if __name__ == "__main__":
    main()
