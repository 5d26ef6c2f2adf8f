# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scanning kernels; semantics match _pyimpl exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def sliding_codes_1d(arr, int width, int base):
    """Radix codes of every contiguous width-window of a 1-D symbol array."""
    cdef cnp.uint64_t[::1] a = np.ascontiguousarray(arr, dtype=np.uint64)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t npos = n - width + 1
    if npos <= 0:
        return np.zeros(0, dtype=np.uint64)
    out_np = np.zeros(npos, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_np
    cdef cnp.uint64_t mult, code
    cdef Py_ssize_t p, j
    cdef cnp.uint64_t b = <cnp.uint64_t> base
    for p in range(npos):
        code = 0
        mult = 1
        for j in range(width):
            code += (a[p + j] - 1) * mult
            mult *= b
        out[p] = code
    return out_np


def sliding_codes_2d(arr, int height, int width, int base):
    """Radix codes of every height x width patch (row-major digit order)."""
    cdef cnp.uint64_t[:, ::1] a = np.ascontiguousarray(arr, dtype=np.uint64)
    cdef Py_ssize_t H = a.shape[0], W = a.shape[1]
    cdef Py_ssize_t nh = H - height + 1, nw = W - width + 1
    if nh <= 0 or nw <= 0:
        return np.zeros((0, 0), dtype=np.uint64)
    out_np = np.zeros((nh, nw), dtype=np.uint64)
    cdef cnp.uint64_t[:, ::1] out = out_np
    cdef cnp.uint64_t mult, code
    cdef Py_ssize_t r, c, i, j
    cdef cnp.uint64_t b = <cnp.uint64_t> base
    for r in range(nh):
        for c in range(nw):
            code = 0
            mult = 1
            for i in range(height):
                for j in range(width):
                    code += (a[r + i, c + j] - 1) * mult
                    mult *= b
            out[r, c] = code
    return out_np


def match_positions(arr, offsets, symbols):
    """Positions p with arr[p + offsets[k]] == symbols[k] for all k."""
    a = np.ascontiguousarray(arr, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] offs = np.ascontiguousarray(
        np.atleast_2d(np.asarray(offsets, dtype=np.int64)))
    cdef cnp.int64_t[::1] syms = np.ascontiguousarray(
        np.asarray(symbols, dtype=np.int64).ravel())
    cdef Py_ssize_t d = a.ndim
    cdef Py_ssize_t k = offs.shape[0]
    if d == 1:
        return _match_1d(a, offs, syms, k)
    if d == 2:
        return _match_2d(a, offs, syms, k)
    # rank > 2 falls back to the vectorized implementation
    from ._pyimpl import match_positions as py_match
    return py_match(arr, offsets, symbols)


cdef _match_1d(cnp.int64_t[::1] a, cnp.int64_t[:, ::1] offs,
               cnp.int64_t[::1] syms, Py_ssize_t k):
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.int64_t lo = 0, hi = 0
    cdef Py_ssize_t i
    for i in range(k):
        if offs[i, 0] < lo:
            lo = offs[i, 0]
        if offs[i, 0] > hi:
            hi = offs[i, 0]
    cdef Py_ssize_t start = -lo if lo < 0 else 0
    cdef Py_ssize_t stop = n - (hi if hi > 0 else 0)
    hits = []
    cdef Py_ssize_t p
    cdef bint ok
    for p in range(start, stop):
        ok = True
        for i in range(k):
            if a[p + offs[i, 0]] != syms[i]:
                ok = False
                break
        if ok:
            hits.append(p)
    out = np.zeros((len(hits), 1), dtype=np.int64)
    for i in range(len(hits)):
        out[i, 0] = hits[i]
    return out


cdef _match_2d(cnp.int64_t[:, ::1] a, cnp.int64_t[:, ::1] offs,
               cnp.int64_t[::1] syms, Py_ssize_t k):
    cdef Py_ssize_t H = a.shape[0], W = a.shape[1]
    cdef cnp.int64_t lo0 = 0, hi0 = 0, lo1 = 0, hi1 = 0
    cdef Py_ssize_t i
    for i in range(k):
        if offs[i, 0] < lo0:
            lo0 = offs[i, 0]
        if offs[i, 0] > hi0:
            hi0 = offs[i, 0]
        if offs[i, 1] < lo1:
            lo1 = offs[i, 1]
        if offs[i, 1] > hi1:
            hi1 = offs[i, 1]
    cdef Py_ssize_t r0 = -lo0 if lo0 < 0 else 0
    cdef Py_ssize_t r1 = H - (hi0 if hi0 > 0 else 0)
    cdef Py_ssize_t c0 = -lo1 if lo1 < 0 else 0
    cdef Py_ssize_t c1 = W - (hi1 if hi1 > 0 else 0)
    hits = []
    cdef Py_ssize_t r, c
    cdef bint ok
    for r in range(r0, r1):
        for c in range(c0, c1):
            ok = True
            for i in range(k):
                if a[r + offs[i, 0], c + offs[i, 1]] != syms[i]:
                    ok = False
                    break
            if ok:
                hits.append((r, c))
    out = np.zeros((len(hits), 2), dtype=np.int64)
    for i in range(len(hits)):
        out[i, 0] = hits[i][0]
        out[i, 1] = hits[i][1]
    return out
