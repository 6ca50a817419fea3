# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit kernels; see ``_kernels_py`` for the shared conventions."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t
from libc.math cimport floor

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_MULT = 0xD1B54A32D192ED03ULL
cdef double U53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t wordk(uint64_t key, uint64_t counter) noexcept nogil:
    return mix64(key + counter * GOLDEN)


cdef inline double unif(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>(wordk(key, counter) >> 11) * U53


cdef inline int64_t lin_invcdf(const double* row, int64_t A, double u) noexcept nogil:
    cdef int64_t a = 0
    while a < A - 1 and u >= row[a]:
        a += 1
    return a


def shift_hits(ids, uint64_t seed, cdf0, cdf, dfa, accept, int64_t L, int64_t order,
               int64_t horizon):
    cdef uint64_t[::1] sid = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef double[::1] c0 = np.ascontiguousarray(cdf0, dtype=np.float64)
    cdef double[:, ::1] cr = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef int32_t[:, ::1] delta = np.ascontiguousarray(dfa, dtype=np.int32)
    cdef uint8_t[::1] acc = np.ascontiguousarray(accept, dtype=np.uint8)
    cdef int64_t n = sid.shape[0], A = c0.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] times = out
    cdef uint64_t base = mix64(seed), key
    cdef int64_t i, m, prev, sym, hits, last_m = horizon + L - 1
    cdef int32_t state
    with nogil:
        for i in range(n):
            key = mix64(base + sid[i] * STREAM_MULT)
            prev = lin_invcdf(&c0[0], A, unif(key, 0))
            state = 0
            hits = 0
            for m in range(1, last_m + 1):
                sym = lin_invcdf(&cr[prev, 0], A, unif(key, <uint64_t>m))
                state = delta[state, sym]
                prev = sym
                if acc[state]:
                    hits += 1
                    if hits == order:
                        times[i] = m - L + 1
                        break
    return out


def shift_return_gaps(ids, uint64_t seed, cdf0, cdf, dfa, accept, int64_t L,
                      int64_t burn_in, int64_t n_gaps, int64_t max_steps):
    cdef uint64_t[::1] sid = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef double[::1] c0 = np.ascontiguousarray(cdf0, dtype=np.float64)
    cdef double[:, ::1] cr = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef int32_t[:, ::1] delta = np.ascontiguousarray(dfa, dtype=np.int32)
    cdef uint8_t[::1] acc = np.ascontiguousarray(accept, dtype=np.uint8)
    cdef int64_t n = sid.shape[0], A = c0.shape[0]
    out = np.full((n, n_gaps), -1, dtype=np.int64)
    cdef int64_t[:, ::1] gaps = out
    cdef uint64_t base = mix64(seed), key
    cdef int64_t o, m, prev, sym, t, last, got
    cdef int32_t state
    with nogil:
        for o in range(n):
            key = mix64(base + sid[o] * STREAM_MULT)
            prev = lin_invcdf(&c0[0], A, unif(key, 0))
            state = 0
            last = -1
            got = 0
            m = 1
            while got < n_gaps and m < max_steps + L:
                sym = lin_invcdf(&cr[prev, 0], A, unif(key, <uint64_t>m))
                state = delta[state, sym]
                prev = sym
                if acc[state]:
                    t = m - L + 1
                    if t > burn_in:
                        if last >= 0:
                            gaps[o, got] = t - last
                            got += 1
                        last = t
                m += 1
    return out


cdef inline uint64_t circ(uint64_t w, uint64_t c) noexcept nogil:
    cdef uint64_t d = w - c
    cdef uint64_t e = (<uint64_t>0) - d
    return d if d < e else e


def doubling_hits(ids, uint64_t seed, uint64_t center, uint64_t radius, int64_t order,
                  int64_t horizon):
    cdef uint64_t[::1] sid = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef int64_t n = sid.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] times = out
    cdef uint64_t base = mix64(seed), key, window, cur
    cdef int64_t i, k, b, hits
    with nogil:
        for i in range(n):
            key = mix64(base + sid[i] * STREAM_MULT)
            window = wordk(key, 0)
            cur = wordk(key, 1)
            hits = 0
            for k in range(1, horizon + 1):
                b = k + 63
                if (b & 63) == 0 and k > 1:
                    cur = wordk(key, <uint64_t>(b >> 6))
                window = (window << 1) | ((cur >> (63 - (b & 63))) & 1)
                if circ(window, center) < radius:
                    hits += 1
                    if hits == order:
                        times[i] = k
                        break
    return out


def doubling_return_gaps(ids, uint64_t seed, uint64_t center, uint64_t radius,
                         int64_t burn_in, int64_t n_gaps, int64_t max_steps):
    cdef uint64_t[::1] sid = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef int64_t n = sid.shape[0]
    out = np.full((n, n_gaps), -1, dtype=np.int64)
    cdef int64_t[:, ::1] gaps = out
    cdef uint64_t base = mix64(seed), key, window, cur
    cdef int64_t o, k, b, last, got
    with nogil:
        for o in range(n):
            key = mix64(base + sid[o] * STREAM_MULT)
            window = wordk(key, 0)
            cur = wordk(key, 1)
            last = -1
            got = 0
            k = 1
            while got < n_gaps and k <= max_steps:
                b = k + 63
                if (b & 63) == 0 and k > 1:
                    cur = wordk(key, <uint64_t>(b >> 6))
                window = (window << 1) | ((cur >> (63 - (b & 63))) & 1)
                if circ(window, center) < radius and k > burn_in:
                    if last >= 0:
                        gaps[o, got] = k - last
                        got += 1
                    last = k
                k += 1
    return out


def tower_hits(ids, uint64_t seed, col_cdf, srb_cdf, heights, cmap, dfa, accept,
               int64_t pre_dur, int64_t level, int64_t order, int64_t horizon):
    cdef uint64_t[::1] sid = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef double[::1] ccdf = np.ascontiguousarray(col_cdf, dtype=np.float64)
    cdef double[::1] scdf = np.ascontiguousarray(srb_cdf, dtype=np.float64)
    cdef int64_t[::1] R = np.ascontiguousarray(heights, dtype=np.int64)
    cdef int32_t[::1] cm = np.ascontiguousarray(cmap, dtype=np.int32)
    cdef int32_t[:, ::1] delta = np.ascontiguousarray(dfa, dtype=np.int32)
    cdef uint8_t[::1] acc = np.ascontiguousarray(accept, dtype=np.uint8)
    cdef int64_t n = sid.shape[0], I = ccdf.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] times = out
    cdef uint64_t base = mix64(seed), key
    cdef int64_t i, c, S, ell, hits, t
    cdef int32_t state
    with nogil:
        for i in range(n):
            key = mix64(base + sid[i] * STREAM_MULT)
            c = lin_invcdf(&scdf[0], I, unif(key, 0))
            S = -<int64_t>floor(unif(key, 1) * R[c])
            state = delta[0, cm[c]]
            hits = 0
            ell = 0
            while True:
                t = S - pre_dur + level
                if acc[state] and t >= 1:
                    if t > horizon:
                        break
                    hits += 1
                    if hits == order:
                        times[i] = t
                        break
                if t > horizon:
                    break
                S += R[c]
                ell += 1
                c = lin_invcdf(&ccdf[0], I, unif(key, <uint64_t>(ell + 1)))
                state = delta[state, cm[c]]
    return out
