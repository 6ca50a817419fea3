"""Cylinder coding, Bowen balls and their cylinder approximations."""

from dataclasses import dataclass
from fractions import Fraction
import itertools
import math

from .systems import (DOUBLING_DEPTH_CAP, DepthExceededError, SystemKind, distance,
                      step)


class UnsupportedEpsilonError(ValueError):
    pass


# Largest explicit refinement enumerated by inner_and_annulus on shifts.
MAX_ENUMERATED_WORDS = 1 << 20


@dataclass(frozen=True)
class CylinderWord:
    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if not self.symbols:
            raise ValueError("cylinder words have length >= 1")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, k):
        return self.symbols[k]

    def __str__(self):
        return "".join(map(str, self.symbols))


def as_word(w):
    return w.symbols if isinstance(w, CylinderWord) else tuple(int(s) for s in w)


def admissible(sys, word):
    """False for words of zero measure (only possible on Markov shifts)."""
    word = as_word(word)
    if any(s < 0 or s >= sys.alphabet_size for s in word):
        raise ValueError(f"word {word} uses symbols outside the alphabet")
    if sys.kind is not SystemKind.MARKOV:
        return True
    P = sys.P
    return all(P[a][b] > 0 for a, b in zip(word, word[1:]))


class WordSet:
    """A finite set of distinct words of common length ``N``.

    ``role`` is ``"inner"`` or ``"annulus"`` (or ``"target"`` for ad hoc sets).
    """

    def __init__(self, words, N=None, role="target"):
        ws = tuple(dict.fromkeys(as_word(w) for w in words))
        if N is None:
            if not ws:
                raise ValueError("empty word set needs an explicit N")
            N = len(ws[0])
        if any(len(w) != N for w in ws):
            raise ValueError("all words in a WordSet must have length N")
        self.N = int(N)
        self.role = role
        self._words = ws
        self._lookup = frozenset(ws)

    def __len__(self):
        return len(self._words)

    def __iter__(self):
        return iter(self._words)

    def __contains__(self, w):
        return as_word(w) in self._lookup

    def __repr__(self):
        return f"WordSet(N={self.N}, role={self.role}, size={len(self)})"

    def to_text(self):
        lines = [f"N={self.N} role={self.role}"]
        for w in self:
            if any(s > 9 for s in w):
                raise ValueError("text format holds single-digit symbols only")
            lines.append("".join(map(str, w)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("missing header line")
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        N = int(header["N"])
        return cls([tuple(int(c) for c in ln) for ln in lines[1:]], N=N,
                   role=header.get("role", "target"))


class DyadicWordSet(WordSet):
    """Binary words of length ``N`` given as ranges of dyadic cell indices.

    Cell ``k`` is ``[k 2^-N, (k+1) 2^-N)``, whose doubling-map coding is the
    ``N``-bit binary expansion of ``k``. Large arcs would have too many
    words to list, so only the ranges are stored.
    """

    def __init__(self, N, ranges, role):
        self.N = int(N)
        self.role = role
        self.ranges = tuple((int(a), int(b)) for a, b in ranges if b > a)

    def __len__(self):
        return sum(b - a for a, b in self.ranges)

    def cells(self):
        for a, b in self.ranges:
            yield from range(a, b)

    def __iter__(self):
        for k in self.cells():
            yield tuple((k >> (self.N - 1 - j)) & 1 for j in range(self.N))

    def __contains__(self, w):
        w = as_word(w)
        if len(w) != self.N:
            return False
        k = int("".join(map(str, w)), 2)
        return any(a <= k < b for a, b in self.ranges)

    def measure(self):
        return Fraction(len(self), 1 << self.N)


@dataclass(frozen=True, eq=False)
class BowenSpec:
    center: object
    epsilon: float
    n: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True, eq=False)
class BallResolution:
    """Exact description of a Bowen ball.

    ``kind`` is ``"arc"`` (doubling map: open arc of ``radius`` about
    ``center``), ``"cylinder"`` (shift: the cylinder ``word``) or ``"whole"``.
    """

    kind: str
    center: object = None
    radius: float = None
    word: tuple = None
    exact: bool = True

    @property
    def length(self):
        return len(self.word) if self.word is not None else 0


# ------------------------------------------------------------------ operations

def coding(sys, x, k):
    """Itinerary of ``x`` through the generating partition for ``k`` steps."""
    if k < 1:
        raise ValueError("coding length must be >= 1")
    if sys.kind is SystemKind.DOUBLING:
        if k > DOUBLING_DEPTH_CAP:
            raise DepthExceededError(
                f"doubling-map coding depth {k} exceeds the float cap {DOUBLING_DEPTH_CAP}")
        out = []
        for _ in range(k):
            out.append(1 if x >= 0.5 else 0)
            x = step(sys, x)
        return CylinderWord(out)
    return CylinderWord(x.prefix(k))


def join_diameter(sys, k):
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.ldexp(1.0, -k)


def agreement_length(epsilon):
    """Number of leading symbols two shift points must share to be within epsilon.

    ``d < eps`` with ``d`` in ``{2^-k}`` holds iff the first ``m`` symbols
    agree, ``m`` the least integer with ``2^-m < eps``; 0 means every pair.
    """
    if epsilon > 1.0:
        return 0
    m = 0
    while math.ldexp(1.0, -m) >= epsilon:
        m += 1
    return m


def bowen_contains(sys, spec, y):
    """Membership in B_{eps,n}(x), by direct iteration of both orbits."""
    x = spec.center
    depth = 64
    if sys.is_shift:
        depth = max(64, agreement_length(spec.epsilon) + 1)
    for k in range(spec.n):
        if k:
            x = step(sys, x)
            y = step(sys, y)
        if not distance(sys, x, y, depth) < spec.epsilon:
            return False
    return True


def resolve_ball(sys, spec):
    if sys.kind is SystemKind.DOUBLING:
        if spec.epsilon > sys.diameter:
            return BallResolution("whole")
        if spec.epsilon >= 0.25:
            raise UnsupportedEpsilonError(
                f"doubling-map balls are resolved for epsilon < 1/4 (got {spec.epsilon})")
        return BallResolution("arc", center=spec.center,
                              radius=math.ldexp(spec.epsilon, -(spec.n - 1)))
    m = agreement_length(spec.epsilon)
    if m == 0:
        return BallResolution("whole")
    return BallResolution("cylinder", word=spec.center.prefix(spec.n - 1 + m))


def _arc_cells(center, radius, N):
    lo = (Fraction(center) - Fraction(radius)) * (1 << N)
    hi = (Fraction(center) + Fraction(radius)) * (1 << N)
    k_in_lo = math.floor(lo) + 1
    k_in_hi = math.floor(hi) - 1  # last cell whose right end is <= hi
    edge = {math.floor(lo), math.floor(hi)}
    return k_in_lo, k_in_hi, edge


def _wrap_ranges(a, b, N):
    """Cell indices a..b-1 on the line, reduced mod 2^N into disjoint ranges."""
    size = 1 << N
    if b <= a:
        return []
    if b - a >= size:
        return [(0, size)]
    a0, b0 = a % size, b % size
    if b0 == 0:
        b0 = size
    if a0 < b0:
        return [(a0, b0)]
    return [(a0, size), (0, b0)]


def default_cylinder_length(mu_ball, eta=0.45):
    """N(n) = ceil(mu(B)^-eta)."""
    return math.ceil(mu_ball ** -eta)


def inner_and_annulus(sys, spec, N):
    """The inner approximation B~ and the annulus, as ``N``-cylinder sets."""
    res = resolve_ball(sys, spec)
    if sys.kind is SystemKind.DOUBLING:
        if N > DOUBLING_DEPTH_CAP:
            raise DepthExceededError(f"N={N} exceeds the doubling depth cap")
        if res.kind == "whole":
            return (DyadicWordSet(N, [(0, 1 << N)], "inner"), DyadicWordSet(N, [], "annulus"))
        k_lo, k_hi, edge = _arc_cells(res.center, res.radius, N)
        inner = DyadicWordSet(N, _wrap_ranges(k_lo, k_hi + 1, N), "inner")
        edge_ranges = []
        for k in sorted(edge):
            edge_ranges += _wrap_ranges(k, k + 1, N)
        return inner, DyadicWordSet(N, sorted(set(edge_ranges)), "annulus")

    if N < res.length:
        raise ValueError(f"N={N} is shorter than the resolved cylinder length {res.length}")
    base = res.word or ()
    free = N - len(base)
    if sys.alphabet_size ** free > MAX_ENUMERATED_WORDS:
        raise ValueError(f"refining to N={N} would enumerate {sys.alphabet_size}**{free} words")
    words = []
    for tail in itertools.product(range(sys.alphabet_size), repeat=free):
        w = tuple(base) + tail
        if admissible(sys, w):
            words.append(w)
    return WordSet(words, N=N, role="inner"), WordSet([], N=N, role="annulus")


def wordset_contains(sys, ws, y):
    return coding(sys, y, ws.N) in ws


def _merged(ranges):
    out = []
    for a, b in sorted(ranges):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def _covers(ranges, a, b, N):
    """True iff every cell index in [a, b) (taken mod 2^N) lies in ``ranges``."""
    merged = _merged(ranges)
    return all(any(x <= lo and hi <= y for x, y in merged) for lo, hi in _wrap_ranges(a, b, N))


def verify_nesting(sys, spec, N):
    """Exact check of B~ <= B <= B~ u dB~ for a doubling-map arc.

    Uses rational arc endpoints and cell-index intervals: the cells strictly
    inside the arc must cover B~, and the cells meeting the arc must lie in
    B~ u dB~.
    """
    res = resolve_ball(sys, spec)
    inner, ann = inner_and_annulus(sys, spec, N)
    if res.kind == "whole":
        return len(inner) == 1 << N
    lo = (Fraction(res.center) - Fraction(res.radius)) * (1 << N)
    hi = (Fraction(res.center) + Fraction(res.radius)) * (1 << N)
    # cells k with lo <= k and k + 1 <= hi are inside the (open) arc up to a null set
    inside_a, inside_b = math.ceil(lo), math.floor(hi)
    inner_ok = all(_covers(_wrap_ranges(inside_a, inside_b, N), a, b, N)
                   for a, b in inner.ranges)
    meeting_a, meeting_b = math.floor(lo), math.ceil(hi)
    cover_ok = _covers(list(inner.ranges) + list(ann.ranges), meeting_a, meeting_b, N)
    return inner_ok and cover_ok
