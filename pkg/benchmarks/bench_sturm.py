"""Time the compiled Sturm bisection kernel against the numpy fallback.

Usage::

    python benchmarks/bench_sturm.py --sizes 2000 8000 32000 --count 6
"""
import argparse
import logging
import time

import numpy as np

from wkbresum import _sturm_py
from wkbresum._kernels import BACKEND

log = logging.getLogger("bench_sturm")


def sho_matrix(n, half_width=10.0):
    h = 2 * half_width / (n + 1)
    x = -half_width + h * np.arange(1, n + 1)
    return 2 / h**2 + x * x, np.full(n - 1, -1 / h**2)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[2000, 8000, 32000])
    ap.add_argument("--count", type=int, default=6, help="lowest eigenvalues to find")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    try:
        from wkbresum import _sturm
    except ImportError:
        log.warning("compiled kernel not built (active backend: %s); timing the fallback only", BACKEND)
        _sturm = None

    print(f"{'n':>7} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max diff':>9}")
    for n in args.sizes:
        d, e = sho_matrix(n)
        lo, hi = float(np.min(d) - 2 * np.max(np.abs(e))), float(np.max(d) + 2 * np.max(np.abs(e)))
        tp, ep = best_of(lambda: _sturm_py.bisect_eigenvalues(d, e, 0, args.count, lo, hi, 1e-15), args.repeat)
        if _sturm is None:
            print(f"{n:7d} {tp:11.4f} {'-':>11} {'-':>8} {'-':>9}")
            continue
        tc, ec = best_of(lambda: _sturm.bisect_eigenvalues(d, e, 0, args.count, lo, hi, 1e-15), args.repeat)
        print(f"{n:7d} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {np.max(np.abs(ep - ec)):9.1e}")


if __name__ == "__main__":
    main()
