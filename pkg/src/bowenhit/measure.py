"""Exact and Monte Carlo measures, the regularity function phi, alpha-mixing."""

from dataclasses import dataclass
from enum import Enum
import math
import threading

import numpy as np

from .symbolic import (DyadicWordSet, agreement_length, as_word, bowen_contains,
                       resolve_ball)
from .systems import DOUBLING_DEPTH_CAP, DepthExceededError, SystemKind, sample_invariant


class MeasureMode(str, Enum):
    EXACT = "Exact"
    MONTE_CARLO = "MonteCarlo"


def hoeffding_half_width(n, confidence=0.99):
    """Distribution-free half-width sqrt(ln(2/(1-c)) / (2n))."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


@dataclass(frozen=True)
class MeasureValue:
    value: float
    mode: MeasureMode = MeasureMode.EXACT
    n_samples: int = None
    half_width: float = 0.0
    note: str = None

    def __post_init__(self):
        if not -1e-15 <= self.value <= 1.0 + 1e-15:
            raise ValueError(f"measure {self.value} outside [0, 1]")

    def __float__(self):
        return float(self.value)


def cylinder_measure(sys, w):
    w = as_word(w)
    if sys.kind is SystemKind.DOUBLING:
        if len(w) > DOUBLING_DEPTH_CAP:
            raise DepthExceededError(f"doubling cylinders are capped at length {DOUBLING_DEPTH_CAP}")
        return MeasureValue(math.ldexp(1.0, -len(w)))
    if sys.kind is SystemKind.BERNOULLI:
        return MeasureValue(math.prod(sys.p[s] for s in w))
    P = sys.P
    v = float(sys.pi[w[0]])
    for a, b in zip(w, w[1:]):
        v *= P[a][b]
    return MeasureValue(v)


def wordset_measure(sys, ws):
    if isinstance(ws, DyadicWordSet):
        return MeasureValue(float(ws.measure()))
    return MeasureValue(min(1.0, math.fsum(cylinder_measure(sys, w).value for w in ws)))


def resolution_measure(sys, res):
    if res.kind == "whole":
        return 1.0
    if res.kind == "arc":
        return min(1.0, 2.0 * res.radius)
    return cylinder_measure(sys, res.word).value


def bowen_measure(sys, spec, mode=MeasureMode.EXACT, n_samples=10_000, seed=0,
                  confidence=0.99):
    """mu(B_{eps,n}(x)), exactly or by counting invariant samples in the ball."""
    if getattr(sys, "is_tower", False):
        from .tower import tower_ball_measure
        return tower_ball_measure(sys, spec, mode=mode, n_samples=n_samples, seed=seed,
                                  confidence=confidence)
    if MeasureMode(mode) is MeasureMode.EXACT:
        return MeasureValue(resolution_measure(sys, resolve_ball(sys, spec)))
    hits = sum(bowen_contains(sys, spec, sample_invariant(sys, seed, i)) for i in range(n_samples))
    return MeasureValue(hits / n_samples, MeasureMode.MONTE_CARLO, n_samples,
                        hoeffding_half_width(n_samples, confidence))


def ball_measure(sys, x, r):
    """mu(B(x, r)) for the open metric ball."""
    if sys.kind is SystemKind.DOUBLING:
        return min(1.0, 2.0 * r)
    m = agreement_length(r)
    if m == 0:
        return 1.0
    return cylinder_measure(sys, x.prefix(m)).value


def phi(sys, epsilon, delta, x):
    """Relative measure of the annulus B(x, eps+delta) minus B(x, eps-delta)."""
    if not 0 < delta < epsilon:
        raise ValueError("phi needs 0 < delta < epsilon")
    mid = ball_measure(sys, x, epsilon)
    if mid <= 0:
        raise ZeroDivisionError("ball of radius epsilon has zero measure")
    return (ball_measure(sys, x, epsilon + delta) - ball_measure(sys, x, epsilon - delta)) / mid


# ------------------------------------------------------------------ alpha-mixing

class AlphaForm(str, Enum):
    ZERO = "Zero"
    GEOMETRIC = "Geometric"
    POLYNOMIAL = "Polynomial"


@dataclass(frozen=True)
class AlphaModel:
    """alpha(k) = 0, c rho^k, or c k^-(2+kappa); ``param`` is rho or kappa."""

    form: AlphaForm
    c: float = 0.0
    param: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "form", AlphaForm(self.form))
        if self.form is AlphaForm.GEOMETRIC and not (0 < self.param < 1 and self.c > 0):
            raise ValueError("geometric alpha needs c > 0 and 0 < rho < 1")
        if self.form is AlphaForm.POLYNOMIAL and not (self.param > 0 and self.c > 0):
            raise ValueError("polynomial alpha needs c > 0 and kappa > 0")

    def __call__(self, k):
        if self.form is AlphaForm.ZERO:
            return 0.0
        if self.form is AlphaForm.GEOMETRIC:
            return self.c * self.param ** k
        return self.c * float(k) ** -(2.0 + self.param)

    def inverse(self, u):
        """Smallest integer k >= 1 with alpha(k) <= u (0 for the Zero model)."""
        if self.form is AlphaForm.ZERO:
            return 0
        if u <= 0:
            raise ValueError("alpha^-1 needs u > 0")
        if self.form is AlphaForm.GEOMETRIC:
            guess = math.log(u / self.c) / math.log(self.param)
        else:
            guess = (self.c / u) ** (1.0 / (2.0 + self.param))
        k = max(1, math.ceil(guess))
        while self(k) > u:
            k += 1
        while k > 1 and self(k - 1) <= u:
            k -= 1
        return k

    def to_config(self):
        return {"form": self.form.value, "c": self.c, "rho_or_kappa": self.param}

    @classmethod
    def from_config(cls, d):
        return cls(AlphaForm(d["form"]), float(d.get("c", 0.0)), float(d.get("rho_or_kappa", 0.0)))


class MatrixPowerCache:
    """Powers P^k, grown on demand.

    Readers index an immutable tuple snapshot; growth builds a longer tuple
    under a lock and swaps it in, so concurrent readers never see a partial list.
    """

    def __init__(self, P):
        self._P = np.array(P, dtype=np.float64)
        self._powers = (np.eye(self._P.shape[0]),)
        self._lock = threading.Lock()

    def __getitem__(self, k):
        powers = self._powers
        if k < len(powers):
            return powers[k]
        with self._lock:
            grown = list(self._powers)
            while len(grown) <= k:
                grown.append(grown[-1] @ self._P)
            self._powers = tuple(grown)
            return self._powers[k]


_power_caches = {}
_cache_lock = threading.Lock()


def _powers_for(sys):
    key = sys.P
    with _cache_lock:
        if key not in _power_caches:
            _power_caches[key] = MatrixPowerCache(np.array(sys.P))
        return _power_caches[key]


def _best_cylinder_masses(sys, L):
    """Max measure of a length-n word by last symbol, and of a length-l word by first symbol."""
    P = np.array(sys.P)
    pi = sys.pi
    ending = [pi.copy()]
    for _ in range(L - 1):
        ending.append((ending[-1][:, None] * P).max(axis=0))
    tail = [np.ones_like(pi)]
    for _ in range(L - 1):
        tail.append((P * tail[-1][None, :]).max(axis=1))
    starting = [pi * g for g in tail]
    return np.max(ending, axis=0), np.max(starting, axis=0)


MAX_ALPHA_WORD_LENGTH = 64


def alpha_coefficient(sys, k, L=8):
    """Largest |mu(A & T^-(n+k) B) - mu(A) mu(B)| over cylinders A, B of length <= L.

    Unions of cylinders are not searched, so on Markov shifts the value is a
    lower bound for the true coefficient (flagged in ``note``).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if L > MAX_ALPHA_WORD_LENGTH:
        raise ValueError(f"cylinder length cap L={L} exceeds {MAX_ALPHA_WORD_LENGTH}")
    if sys.kind is not SystemKind.MARKOV:
        return MeasureValue(0.0, note="independent blocks")
    a_mass, b_mass = _best_cylinder_masses(sys, L)
    Pk = _powers_for(sys)[k + 1]
    dev = np.abs(Pk / sys.pi[None, :] - 1.0)
    val = float((a_mass[:, None] * b_mass[None, :] * dev).max())
    return MeasureValue(val, note="single-cylinder lower bound")


def alpha_scan(sys, ks, L=8):
    """Coefficients over ``ks`` made nonincreasing by a right-to-left running max."""
    ks = np.asarray(list(ks), dtype=np.int64)
    raw = np.array([alpha_coefficient(sys, int(k), L).value for k in ks])
    return ks, np.maximum.accumulate(raw[::-1])[::-1]


def fit_geometric(ks, alphas):
    """Least-squares fit of log alpha(k) = log c + k log rho; Zero model if alpha vanishes."""
    ks = np.asarray(ks, dtype=np.float64)
    alphas = np.asarray(alphas, dtype=np.float64)
    keep = alphas > 1e-300
    if keep.sum() < 2 or alphas.max() <= 1e-14:
        return AlphaModel(AlphaForm.ZERO)
    slope, intercept = np.polyfit(ks[keep], np.log(alphas[keep]), 1)
    return AlphaModel(AlphaForm.GEOMETRIC, float(math.exp(intercept)), float(math.exp(slope)))


def second_eigenvalue_modulus(sys):
    if sys.kind is not SystemKind.MARKOV:
        return 0.0
    ev = np.sort(np.abs(np.linalg.eigvals(np.array(sys.P))))[::-1]
    return float(ev[1])


def s_parameter(alpha, mu_inner, N, c_prime=0.5):
    """s = alpha^-1(C' mu(B~)) + N."""
    if not mu_inner > 0:
        raise ValueError("mu_inner must be positive")
    if not 0 < c_prime < 1:
        raise ValueError("C' must lie in (0, 1)")
    return alpha.inverse(c_prime * mu_inner) + int(N)
