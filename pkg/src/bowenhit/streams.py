"""Counter-based random streams.

Every random quantity in the package is a pure function of
``(seed, stream, counter)``: the 64-bit word at a given counter is the
SplitMix64 output for a per-stream starting state, i.e. the finaliser
applied to ``key + counter * GOLDEN``. Because nothing is sequential, a
trial's randomness does not depend on which worker runs it or in what
order, and the compiled and numpy kernels reproduce each other bit for bit.

Streams are identified by unsigned 64-bit integers. By convention trial
``i`` of an experiment uses stream ``i``; auxiliary draws use streams at
or above :data:`AUX_STREAM_BASE`.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
STREAM_MULT = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

AUX_STREAM_BASE = 1 << 40

_U53 = 1.0 / (1 << 53)


def mix64(z):
    """SplitMix64 finaliser on a Python int (a bijection of 64-bit words)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, stream):
    return mix64((mix64(seed) + (stream & MASK64) * STREAM_MULT) & MASK64)


def word(seed, stream, counter):
    """The 64-bit word at position ``counter`` of stream ``(seed, stream)``."""
    return mix64((stream_key(seed, stream) + counter * GOLDEN) & MASK64)


def uniform(seed, stream, counter):
    """Uniform double in [0, 1) with 53 random bits."""
    return (word(seed, stream, counter) >> 11) * _U53


# numpy versions: uint64 arithmetic wraps modulo 2**64 silently for arrays.

def mix64_np(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_keys_np(seed, streams):
    streams = np.asarray(streams, dtype=np.uint64)
    base = np.uint64(mix64(seed))
    with np.errstate(over="ignore"):
        return mix64_np(base + streams * np.uint64(STREAM_MULT))


def words_np(keys, counters):
    """Words for precomputed stream keys; ``keys`` and ``counters`` broadcast."""
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.asarray(keys, dtype=np.uint64) + counters * np.uint64(GOLDEN)
    return mix64_np(z)


def uniforms_np(keys, counters):
    return (words_np(keys, counters) >> np.uint64(11)).astype(np.float64) * _U53


def invcdf(cdf, u):
    """Smallest index ``a`` with ``u < cdf[a]`` (``cdf[-1]`` must be 1)."""
    return int(np.searchsorted(cdf, u, side="right"))
