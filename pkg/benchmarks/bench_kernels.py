#!/usr/bin/env python3
"""Compare the compiled signal kernels against the pure-numpy fallback.

Run: python3 benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from contextst.kernels import BACKEND, _numpy

if BACKEND == "cython":
    from contextst.kernels import _fast
else:
    _fast = None


def best_of(fn, repeats, *args):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - started)
    return best


def bench_moving_average(repeats):
    print("moving_average (kappa=25)")
    for n in (96, 1024, 65536, 1048576):
        x = np.ascontiguousarray(np.random.default_rng(0).standard_normal(n))
        t_np = best_of(_numpy.moving_average, repeats, x, 25)
        line = f"  n={n:>8}: numpy {t_np * 1e6:9.1f} us"
        if _fast is not None:
            t_cy = best_of(_fast.moving_average, repeats, x, 25)
            line += f"  cython {t_cy * 1e6:9.1f} us  ({t_np / t_cy:5.2f}x)"
        print(line)


def bench_gaf(repeats):
    print("gaf_from_normalized")
    for n in (96, 512, 2048):
        x = np.ascontiguousarray(
            np.clip(np.random.default_rng(1).standard_normal(n), -1, 1)
        )
        t_np = best_of(_numpy.gaf_from_normalized, repeats, x)
        line = f"  n={n:>8}: numpy {t_np * 1e6:9.1f} us"
        if _fast is not None:
            t_cy = best_of(_fast.gaf_from_normalized, repeats, x)
            line += f"  cython {t_cy * 1e6:9.1f} us  ({t_np / t_cy:5.2f}x)"
        print(line)


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    print(f"active backend: {BACKEND} (best of {repeats} runs)")
    if _fast is None:
        print("compiled kernels unavailable; timing the fallback only")
    bench_moving_average(repeats)
    bench_gaf(repeats)


if __name__ == "__main__":
    main()
