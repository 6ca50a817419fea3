"""Concrete dynamical systems: the doubling map and one-sided shifts.

A :class:`SystemDescriptor` bundles the map, the metric and the invariant
measure. Doubling-map points are plain floats in [0, 1); shift points are
:class:`ShiftPoint` objects that materialise symbols lazily from a
deterministic source.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from . import streams


class SystemKind(str, Enum):
    DOUBLING = "DoublingMap"
    BERNOULLI = "BernoulliShift"
    MARKOV = "MarkovShift"


# Coding depth available from a float doubling-map point.
DOUBLING_DEPTH_CAP = 50


class DepthExceededError(ValueError):
    pass


def _stationary(P):
    A = P.shape[0]
    # pi (P - I) = 0 together with sum(pi) = 1
    M = np.vstack([P.T - np.eye(A), np.ones((1, A))])
    rhs = np.zeros(A + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return pi


def _cdf(p):
    c = np.cumsum(np.asarray(p, dtype=np.float64), axis=-1)
    c[..., -1] = 1.0
    return c


@dataclass(frozen=True)
class SystemDescriptor:
    """An immutable description of (X, T, mu, d).

    Use the :meth:`doubling`, :meth:`bernoulli` and :meth:`markov`
    constructors; they validate the parameters.
    """

    kind: SystemKind
    p: tuple = ()
    P: tuple = ()
    pi: np.ndarray = field(default=None, compare=False, repr=False)
    cdf0: np.ndarray = field(default=None, compare=False, repr=False)
    cdf: np.ndarray = field(default=None, compare=False, repr=False)

    @classmethod
    def doubling(cls):
        half = np.array([0.5, 1.0])
        return cls(SystemKind.DOUBLING, pi=np.array([0.5, 0.5]), cdf0=half,
                   cdf=np.vstack([half, half]))

    @classmethod
    def bernoulli(cls, p):
        p = tuple(float(v) for v in p)
        if len(p) < 2:
            raise ValueError("alphabet size must be at least 2")
        if any(v < 0 for v in p):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        cdf0 = _cdf(p)
        return cls(SystemKind.BERNOULLI, p=p, pi=np.array(p), cdf0=cdf0,
                   cdf=np.tile(cdf0, (len(p), 1)))

    @classmethod
    def markov(cls, P):
        Pm = np.array(P, dtype=np.float64)
        if Pm.ndim != 2 or Pm.shape[0] != Pm.shape[1] or Pm.shape[0] < 2:
            raise ValueError("transition matrix must be square with size >= 2")
        if (Pm < 0).any():
            raise ValueError("transition matrix has negative entries")
        rows = Pm.sum(axis=1)
        if np.abs(rows - 1.0).max() > 1e-12:
            raise ValueError(f"transition matrix is not row-stochastic: row sums {rows}")
        pi = _stationary(Pm)
        if np.abs(pi @ Pm - pi).max() > 1e-10 or (pi <= 0).any():
            raise ValueError("chain has no strictly positive stationary vector")
        return cls(SystemKind.MARKOV, P=tuple(map(tuple, Pm.tolist())), pi=pi,
                   cdf0=_cdf(pi), cdf=_cdf(Pm))

    @property
    def is_shift(self):
        return self.kind is not SystemKind.DOUBLING

    @property
    def alphabet_size(self):
        return len(self.pi)

    @property
    def transition(self):
        """Row-stochastic matrix of the symbol process (rows equal for i.i.d.)."""
        if self.kind is SystemKind.MARKOV:
            return np.array(self.P)
        return np.tile(self.pi, (self.alphabet_size, 1))

    @property
    def diameter(self):
        return 0.5 if self.kind is SystemKind.DOUBLING else 1.0

    def entropy(self):
        """Metric entropy in nats."""
        if self.kind is SystemKind.DOUBLING:
            return math.log(2.0)
        P = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(P > 0, P * np.log(P), 0.0)
        return float(-(self.pi[:, None] * terms).sum())

    def to_config(self):
        if self.kind is SystemKind.DOUBLING:
            return {"kind": self.kind.value}
        if self.kind is SystemKind.BERNOULLI:
            return {"kind": self.kind.value, "p": list(self.p)}
        return {"kind": self.kind.value, "P": [list(r) for r in self.P]}


# ---------------------------------------------------------------- shift points

class StreamSource:
    """Symbols of an invariant-measure sample drawn from a counter stream."""

    def __init__(self, sys, seed, stream):
        self.sys = sys
        self.seed = int(seed)
        self.stream = int(stream)

    def symbol(self, pos, prev):
        u = streams.uniform(self.seed, self.stream, pos)
        if pos == 0:
            return streams.invcdf(self.sys.cdf0, u)
        return streams.invcdf(self.sys.cdf[prev], u)


class PeriodicSource:
    def __init__(self, word):
        self.word = tuple(int(s) for s in word)

    def symbol(self, pos, prev):
        return self.word[pos % len(self.word)]


class ShiftPoint:
    """A point of a one-sided shift.

    Symbols ``0 .. len(prefix)-1`` are given explicitly; later symbols come
    from ``source`` (absolute positions, so extension is deterministic). A
    point without a source is finite and raises ``IndexError`` past its end.
    Shifting drops the first symbol, so only a window is ever held.
    """

    __slots__ = ("_buf", "_start", "_prev", "source")

    def __init__(self, prefix=(), source=None, *, _start=0, _prev=None):
        self._buf = [int(s) for s in prefix]
        self._start = _start
        self._prev = _prev
        self.source = source

    @classmethod
    def periodic(cls, word):
        return cls((), PeriodicSource(word))

    def _extend(self, upto):
        while len(self._buf) < upto:
            if self.source is None:
                raise IndexError("finite shift point has no further symbols")
            pos = self._start + len(self._buf)
            prev = self._buf[-1] if self._buf else self._prev
            self._buf.append(self.source.symbol(pos, prev))

    def __getitem__(self, k):
        if k < 0:
            raise IndexError("negative symbol index")
        self._extend(k + 1)
        return self._buf[k]

    def prefix(self, k):
        self._extend(k)
        return tuple(self._buf[:k])

    @property
    def materialized(self):
        return tuple(self._buf)

    @property
    def offset(self):
        """Number of shifts applied since the point was created."""
        return self._start

    def shifted(self):
        self._extend(1)
        return ShiftPoint(self._buf[1:], self.source, _start=self._start + 1, _prev=self._buf[0])

    def __repr__(self):
        shown = ",".join(map(str, self._buf[:12]))
        return f"ShiftPoint(({shown}{',...' if self.source else ''}), offset={self._start})"


# ------------------------------------------------------------------ operations

def step(sys, x):
    """Apply T once."""
    if sys.kind is SystemKind.DOUBLING:
        y = 2.0 * x
        return y - 1.0 if y >= 1.0 else y
    return x.shifted()


def iterate(sys, x, k):
    for _ in range(k):
        x = step(sys, x)
    return x


def distance(sys, x, y, depth=64):
    """The metric d.

    Shifts: ``2**-k`` with ``k`` the first disagreeing index, looking at
    most ``depth`` symbols deep; points agreeing that far are at distance 0.
    """
    if sys.kind is SystemKind.DOUBLING:
        d = abs(x - y)
        return min(d, 1.0 - d)
    for k in range(depth):
        try:
            a, b = x[k], y[k]
        except IndexError:
            break
        if a != b:
            return 2.0 ** -k
    return 0.0


def sample_invariant(sys, seed, stream):
    """Draw a point from mu, deterministically in ``(seed, stream)``.

    For the doubling map the float is the top 53 bits of the stream's first
    word; the compiled kernels continue the same orbit with further bits.
    """
    if sys.kind is SystemKind.DOUBLING:
        return (streams.word(seed, stream, 0) >> 11) * 2.0 ** -53
    return ShiftPoint((), StreamSource(sys, seed, stream))


def to_fixed(x):
    """A doubling-map point as a 64-bit fixed-point integer (floor)."""
    return int(math.ldexp(x, 64)) & streams.MASK64
