"""Compare the compiled kernels against their plain-Python bodies.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from frl import kernels
from frl._jit import ENABLED


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    cases = []
    for n in (5, 20, 50):
        a = rng.standard_normal((n, n))
        cases.append((f"jacobi_svd {n}x{n}", kernels.jacobi_svd, (a,)))
    for size in (10, 10_000):
        p, g, m, v = (rng.standard_normal(size) for _ in range(4))
        v = np.abs(v)
        cases.append((f"adam_update n={size}", kernels.adam_update, (p, g, m, v, 3, 1e-3, 0.9, 0.999, 1e-8, 0.0)))

    print(f"numba enabled: {ENABLED}")
    print(f"{'kernel':<24}{'compiled (s)':>14}{'python (s)':>14}{'speedup':>10}")
    for name, fn, call_args in cases:
        fn(*call_args)  # compile outside the timing
        fast = best_of(lambda: fn(*call_args), args.repeat)
        slow = best_of(lambda: fn.py_func(*call_args), max(1, args.repeat // 2))
        print(f"{name:<24}{fast:>14.3e}{slow:>14.3e}{slow / fast:>10.1f}")


if __name__ == "__main__":
    main()
