"""Benchmark the compiled kernels against the NumPy fallback.

Run as: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from tilecodes._kernels import BACKEND, _pyimpl

try:
    from tilecodes._kernels import _fastimpl
except ImportError:
    _fastimpl = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rng = np.random.default_rng(0)
    cases = [
        ("sliding_codes_1d", "sliding_codes_1d",
         (rng.integers(1, 5, 2 ** 18), 12, 4)),
        ("sliding_codes_2d", "sliding_codes_2d",
         (rng.integers(1, 3, (512, 512)), 5, 5, 2)),
        ("match_positions", "match_positions",
         (rng.integers(1, 3, (512, 512)),
          np.array([[0, 0], [1, 0], [0, 1], [2, 2]]),
          np.array([1, 1, 2, 1]))),
    ]
    print(f"active backend: {BACKEND}")
    for label, name, args in cases:
        t_py, out_py = timeit(getattr(_pyimpl, name), *args)
        line = f"{label:20s} numpy {t_py * 1e3:8.2f} ms"
        if _fastimpl is not None:
            t_cy, out_cy = timeit(getattr(_fastimpl, name), *args)
            assert np.array_equal(np.asarray(out_py), np.asarray(out_cy)), label
            line += f"   cython {t_cy * 1e3:8.2f} ms   speedup {t_py / t_cy:5.2f}x"
        print(line)


if __name__ == "__main__":
    main()
