"""Pure numpy/Python implementations of the orbit kernels.

Entry-time kernels vectorise across trials (one numpy pass per time
step); long-orbit return kernels loop in Python over blocks of pre-hashed
uniforms. Results are bit-identical to the compiled kernels.

Conventions shared with ``_kernels.pyx``:

* a time reported as ``-1`` is censored (beyond ``horizon``);
* shift symbol ``pos`` of stream ``s`` is drawn from ``uniform(seed, s, pos)``
  through ``cdf0`` (pos 0) or the row ``cdf[prev]``;
* doubling bit ``b`` of stream ``s`` is bit ``63 - (b & 63)`` of word
  ``b >> 6``; the orbit point at time ``k`` is bits ``k .. k+63``.
"""

import numpy as np

from .streams import stream_keys_np, uniforms_np, words_np, stream_key, mix64, GOLDEN, MASK64

_BLOCK = 4096


def _symbols_from(cdf_rows, u):
    return (u[:, None] >= cdf_rows).sum(axis=1)


def shift_hits(ids, seed, cdf0, cdf, dfa, accept, L, order, horizon):
    ids = np.asarray(ids, dtype=np.uint64)
    n = ids.size
    times = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return times
    keys = stream_keys_np(seed, ids)
    prev = np.searchsorted(cdf0, uniforms_np(keys, 0), side="right").astype(np.int64)
    state = np.zeros(n, dtype=np.int64)
    hits = np.zeros(n, dtype=np.int64)
    accept = np.asarray(accept, dtype=bool)
    active = np.arange(n)
    for m in range(1, horizon + L):
        if active.size == 0:
            break
        u = uniforms_np(keys[active], m)
        sym = _symbols_from(cdf[prev[active]], u)
        st = dfa[state[active], sym]
        state[active] = st
        prev[active] = sym
        acc = accept[st]
        if acc.any():
            hits[active[acc]] += 1
            fin = acc & (hits[active] == order)
            times[active[fin]] = m - L + 1
            active = active[~fin]
    return times


def shift_return_gaps(ids, seed, cdf0, cdf, dfa, accept, L, burn_in, n_gaps, max_steps):
    ids = np.asarray(ids, dtype=np.uint64)
    out = np.full((ids.size, n_gaps), -1, dtype=np.int64)
    cdf0 = np.asarray(cdf0)
    cdf_rows = [np.asarray(r) for r in cdf]
    dfa_l = np.asarray(dfa).tolist()
    acc = np.asarray(accept, dtype=bool).tolist()
    for o, sid in enumerate(ids):
        key = stream_keys_np(seed, sid)
        prev = int(np.searchsorted(cdf0, uniforms_np(key, 0), side="right"))
        state, last, got = 0, -1, 0
        m = 1
        while got < n_gaps and m < max_steps + L:
            hi = min(m + _BLOCK, max_steps + L)
            us = uniforms_np(key, np.arange(m, hi, dtype=np.uint64))
            for u in us.tolist():
                row = cdf_rows[prev]
                sym = int(np.searchsorted(row, u, side="right"))
                state = dfa_l[state][sym]
                prev = sym
                if acc[state]:
                    t = m - L + 1
                    if t > burn_in:
                        if last >= 0:
                            out[o, got] = t - last
                            got += 1
                            if got == n_gaps:
                                break
                        last = t
                m += 1
    return out


def doubling_hits(ids, seed, center, radius, order, horizon):
    ids = np.asarray(ids, dtype=np.uint64)
    n = ids.size
    times = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return times
    keys = stream_keys_np(seed, ids)
    window = words_np(keys, 0)
    cur = words_np(keys, 1)
    c = np.uint64(center)
    r = np.uint64(radius)
    zero = np.uint64(0)
    one = np.uint64(1)
    hits = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    for k in range(1, horizon + 1):
        if active.size == 0:
            break
        b = k + 63
        if (b & 63) == 0 and k > 1:
            cur[active] = words_np(keys[active], b >> 6)
        bit = (cur[active] >> np.uint64(63 - (b & 63))) & one
        w = (window[active] << one) | bit
        window[active] = w
        diff = w - c
        dist = np.minimum(diff, zero - diff)
        acc = dist < r
        if acc.any():
            hits[active[acc]] += 1
            fin = acc & (hits[active] == order)
            times[active[fin]] = k
            active = active[~fin]
    return times


def doubling_return_gaps(ids, seed, center, radius, burn_in, n_gaps, max_steps):
    ids = np.asarray(ids, dtype=np.uint64)
    out = np.full((ids.size, n_gaps), -1, dtype=np.int64)
    for o, sid in enumerate(ids.tolist()):
        key = stream_key(seed, sid)

        def wd(q):
            return mix64((key + q * GOLDEN) & MASK64)

        window = wd(0)
        cur = wd(1)
        last, got = -1, 0
        for k in range(1, max_steps + 1):
            b = k + 63
            if (b & 63) == 0 and k > 1:
                cur = wd(b >> 6)
            window = ((window << 1) & MASK64) | ((cur >> (63 - (b & 63))) & 1)
            diff = (window - center) & MASK64
            if min(diff, (-diff) & MASK64) < radius and k > burn_in:
                if last >= 0:
                    out[o, got] = k - last
                    got += 1
                    if got == n_gaps:
                        break
                last = k
    return out


def tower_hits(ids, seed, col_cdf, srb_cdf, heights, cmap, dfa, accept, pre_dur,
               level, order, horizon):
    ids = np.asarray(ids, dtype=np.uint64)
    n = ids.size
    times = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return times
    keys = stream_keys_np(seed, ids)
    accept = np.asarray(accept, dtype=bool)
    c = np.searchsorted(srb_cdf, uniforms_np(keys, 0), side="right")
    j0 = np.floor(uniforms_np(keys, 1) * heights[c]).astype(np.int64)
    S = -j0
    state = dfa[np.zeros(n, dtype=np.int64), cmap[c]]
    hits = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    ell = 0
    while active.size:
        st = state[active]
        q_start = S[active] - pre_dur + level
        acc = accept[st] & (q_start >= 1)
        if acc.any():
            hits[active[acc]] += 1
            fin = acc & (hits[active] == order)
            t = q_start[fin]
            times[active[fin]] = np.where(t <= horizon, t, -1)
            active = active[~fin]
            q_start = S[active] - pre_dur + level
        active = active[q_start <= horizon]
        if active.size == 0:
            break
        S[active] += heights[c[active]]
        ell += 1
        cn = np.searchsorted(col_cdf, uniforms_np(keys[active], ell + 1), side="right")
        c[active] = cn
        state[active] = dfa[state[active], cmap[cn]]
    return times
