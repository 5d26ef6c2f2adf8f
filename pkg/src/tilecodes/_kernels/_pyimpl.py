"""Pure NumPy implementations of the hot scanning kernels.

These are the fallback used when the compiled extension is unavailable
(set TILECODES_FORCE_PY=1 to force them).  Semantics must match
`_fastimpl` exactly; the benchmark in benchmarks/bench_kernels.py compares
the two backends.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def sliding_codes_1d(arr: np.ndarray, width: int, base: int) -> np.ndarray:
    """Radix codes of every contiguous width-window of a 1-D symbol array.

    Symbols are 1-based; digit value is symbol-1, little-endian in position.
    Result has length len(arr) - width + 1, dtype uint64.
    """
    a = np.asarray(arr, dtype=np.uint64) - 1
    npos = a.shape[0] - width + 1
    if npos <= 0:
        return np.zeros(0, dtype=np.uint64)
    codes = np.zeros(npos, dtype=np.uint64)
    mult = np.uint64(1)
    for j in range(width):
        codes += a[j:j + npos] * mult
        mult *= np.uint64(base)
    return codes


def sliding_codes_2d(arr: np.ndarray, height: int, width: int,
                     base: int) -> np.ndarray:
    """Radix codes of every height x width patch (row-major digit order)."""
    a = np.asarray(arr, dtype=np.uint64) - 1
    H, W = a.shape
    nh, nw = H - height + 1, W - width + 1
    if nh <= 0 or nw <= 0:
        return np.zeros((0, 0), dtype=np.uint64)
    codes = np.zeros((nh, nw), dtype=np.uint64)
    mult = np.uint64(1)
    for i in range(height):
        for j in range(width):
            codes += a[i:i + nh, j:j + nw] * mult
            mult *= np.uint64(base)
    return codes


def match_positions(arr: np.ndarray, offsets: np.ndarray,
                    symbols: np.ndarray) -> np.ndarray:
    """Positions p (array coordinates) where arr[p + offsets[k]] == symbols[k]
    for all k.

    `arr` is d-dimensional, `offsets` is (k, d) int64, `symbols` is (k,).
    Valid positions are those where every offset lands inside the array.
    Returns an (m, d) int64 array of positions in row-major order.
    """
    a = np.asarray(arr)
    offs = np.atleast_2d(np.asarray(offsets, dtype=np.int64))
    syms = np.asarray(symbols)
    d = a.ndim
    lo = offs.min(axis=0)
    hi = offs.max(axis=0)
    starts = np.maximum(0, -lo)
    stops = np.array(a.shape) - np.maximum(0, hi)
    if np.any(stops <= starts):
        return np.zeros((0, d), dtype=np.int64)
    shape = tuple(int(stops[i] - starts[i]) for i in range(d))
    ok = np.ones(shape, dtype=bool)
    for k in range(offs.shape[0]):
        sl = tuple(
            slice(int(starts[i] + offs[k, i]),
                  int(starts[i] + offs[k, i] + shape[i]))
            for i in range(d))
        ok &= a[sl] == syms[k]
    pos = np.argwhere(ok)
    pos += starts
    return pos.astype(np.int64)
