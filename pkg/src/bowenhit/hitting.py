"""Entry and return times: sampling, survival curves, lambda, a_A, entropy, bounds.

Trial ``i`` of an entry experiment is the orbit of ``sample_invariant(sys,
seed, i)``; return experiments follow long orbits on auxiliary streams.
Work is split into id chunks that may run on several threads (the compiled
kernels release the GIL); results are reassembled in id order, so every
output is independent of the worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .automaton import PatternAutomaton
from .oracle import arc_period, as_wordset, period as word_period, target_measure
from .streams import AUX_STREAM_BASE, word as stream_word
from .survival import (LambdaEstimate, SurvivalCurve, default_grid, dkw_bound,
                       empirical_survival, lambda_estimator)
from .symbolic import BowenSpec, CylinderWord, WordSet, agreement_length, resolve_ball
from .systems import SystemKind, to_fixed

CENSOR_LIMIT = 0.10
DEFAULT_BURN_IN = 1_000_000
DEFAULT_ORBITS = 32


class InsufficientHitsError(RuntimeError):
    pass


class EmptyRangeError(ValueError):
    pass


# ------------------------------------------------------------------ targets

@dataclass(frozen=True, eq=False)
class HitTarget:
    """A target in the form the kernels consume.

    ``kind`` is ``"arc"`` (doubling map, 64-bit fixed-point centre and
    radius), ``"words"`` (cylinder set, via its automaton) or ``"whole"``.
    """

    kind: str
    mu: float
    label: str
    center_fixed: int = 0
    radius_fixed: int = 0
    words: WordSet = None
    automaton: PatternAutomaton = None

    @property
    def length(self):
        return self.words.N if self.words is not None else 0


def _words_target(sys, ws):
    ws = as_wordset(ws)
    aut = PatternAutomaton(ws, sys.alphabet_size)
    label = ",".join("".join(map(str, w)) for w in list(ws)[:4])
    if len(ws) > 4:
        label += f",...({len(ws)} words)"
    return HitTarget("words", target_measure(sys, ws), label, words=ws, automaton=aut)


def resolve_target(sys, target):
    """Accepts a HitTarget, BowenSpec, WordSet, CylinderWord or plain tuple."""
    if isinstance(target, HitTarget):
        return target
    if isinstance(target, BowenSpec):
        res = resolve_ball(sys, target)
        if res.kind == "whole":
            return HitTarget("whole", 1.0, "whole")
        if res.kind == "arc":
            c = to_fixed(res.center)
            r = int(math.ldexp(res.radius, 64))
            return HitTarget("arc", min(1.0, 2.0 * res.radius),
                             f"arc({res.center!r},{res.radius!r})", center_fixed=c, radius_fixed=r)
        return _words_target(sys, CylinderWord(res.word))
    return _words_target(sys, target)


def target_period(sys, tgt):
    if tgt.kind == "whole":
        return 1
    if tgt.kind == "arc":
        return arc_period(tgt.center_fixed, tgt.radius_fixed)
    return word_period(tgt.words, sys)


# ------------------------------------------------------------------ samples

@dataclass
class EntrySample:
    """Hit times of one experiment.

    ``times`` holds the uncensored times in trial (or orbit) order;
    ``censored_count`` trials did not hit within ``horizon``. For return
    samples ``batches`` gives the number of gaps taken from each orbit.
    """

    times: np.ndarray
    censored_count: int
    horizon: int
    target: str
    mode: str
    n_trials: int
    mu: float
    seed: int
    batches: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def censored_fraction(self):
        return self.censored_count / self.n_trials if self.n_trials else 0.0

    @property
    def all_censored(self):
        return self.censored_count == self.n_trials

    def counts(self):
        """(time, count) pairs of the uncensored times, ascending in time."""
        vals, cnt = np.unique(self.times, return_counts=True)
        return vals, cnt


def default_horizon(mu):
    return int(math.ceil(50.0 / mu))


def _chunked(fn, ids, workers):
    ids = np.asarray(ids, dtype=np.uint64)
    workers = max(1, int(workers))
    if workers == 1 or ids.size < 2:
        return fn(ids)
    chunks = [c for c in np.array_split(ids, min(ids.size, 4 * workers)) if c.size]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0)


def _hits(sys, tgt, ids, seed, order, horizon, workers, backend):
    k = kernels.get_backend(backend)
    if tgt.kind == "whole":
        return np.full(len(ids), order, dtype=np.int64)
    if tgt.kind == "arc":
        def fn(chunk):
            return k.doubling_hits(chunk, seed, tgt.center_fixed, tgt.radius_fixed, order, horizon)
    else:
        aut = tgt.automaton

        def fn(chunk):
            return k.shift_hits(chunk, seed, sys.cdf0, sys.cdf, aut.delta,
                                aut.accept.astype(np.uint8), tgt.length, order, horizon)
    return _chunked(fn, ids, workers)


def sample_entry_times(sys, target, M, horizon=None, seed=0, workers=1, backend=None,
                       order=1):
    """First (or ``order``-th) entry times of M orbits started from mu."""
    if M < 1:
        raise ValueError("M must be >= 1")
    tgt = resolve_target(sys, target)
    if horizon is None:
        horizon = order * default_horizon(tgt.mu)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    raw = _hits(sys, tgt, np.arange(M, dtype=np.uint64), seed, order, horizon, workers, backend)
    times = raw[raw > 0]
    mode = "Entry" if order == 1 else f"HigherOrder({order})"
    return EntrySample(times, int(M - times.size), int(horizon), tgt.label, mode, int(M),
                       tgt.mu, int(seed))


def higher_order_returns(sys, target, j, M, horizon=None, seed=0, workers=1, backend=None):
    """Times of the j-th entry; j = 1 is exactly :func:`sample_entry_times`."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return sample_entry_times(sys, target, M, horizon, seed, workers, backend, order=j)


def sample_return_times(sys, target, M, horizon=None, seed=0, burn_in=DEFAULT_BURN_IN,
                        n_orbits=DEFAULT_ORBITS, workers=1, backend=None, max_steps=None):
    """M successive return gaps collected along ``n_orbits`` stationary orbits.

    After ``burn_in`` steps each visit starts a return clock. Orbit ``o``
    supplies ``M // n_orbits`` gaps (the first ``M % n_orbits`` orbits one
    more) and runs at most ``max_steps`` steps.
    """
    tgt = resolve_target(sys, target)
    if horizon is None:
        horizon = default_horizon(tgt.mu)
    n_orbits = max(1, min(int(n_orbits), int(M)))
    quota = [M // n_orbits + (o < M % n_orbits) for o in range(n_orbits)]
    batches = tuple(quota)
    if tgt.kind == "whole":
        return EntrySample(np.ones(M, dtype=np.int64), 0, horizon, tgt.label, "Return", M,
                           1.0, seed, batches)
    if max_steps is None:
        max_steps = burn_in + int(math.ceil(4 * max(quota) / tgt.mu)) + horizon
    k = kernels.get_backend(backend)
    ids = AUX_STREAM_BASE + np.arange(n_orbits, dtype=np.uint64)

    def one(o):
        sid = ids[o:o + 1]
        if tgt.kind == "arc":
            g = k.doubling_return_gaps(sid, seed, tgt.center_fixed, tgt.radius_fixed, burn_in,
                                       quota[o], max_steps)
        else:
            aut = tgt.automaton
            g = k.shift_return_gaps(sid, seed, sys.cdf0, sys.cdf, aut.delta,
                                    aut.accept.astype(np.uint8), tgt.length, burn_in,
                                    quota[o], max_steps)
        return g[0]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(n_orbits)))
    else:
        parts = [one(o) for o in range(n_orbits)]
    gaps = np.concatenate(parts)
    if (gaps < 0).any():
        raise InsufficientHitsError(
            f"only {(gaps > 0).sum()} of {M} returns within {max_steps} steps per orbit")
    return EntrySample(gaps, int((gaps > horizon).sum()), int(horizon), tgt.label, "Return",
                       int(M), tgt.mu, int(seed), batches,
                       meta={"burn_in": burn_in, "n_orbits": n_orbits})


def kac_statistic(sample):
    """(mean * mu, sigma_hat) with sigma_hat from batch means over orbits."""
    x = sample.times.astype(np.float64) * sample.mu
    ratio = float(x.mean())
    if len(sample.batches) >= 2:
        edges = np.cumsum((0,) + sample.batches)
        # orbit means are independent; batch sizes differ by at most one
        means = np.array([x[a:b].mean() for a, b in zip(edges[:-1], edges[1:])])
        sigma = float(means.std(ddof=1) / math.sqrt(means.size))
    else:
        sigma = float(x.std(ddof=1) / math.sqrt(x.size))
    return ratio, sigma


# ------------------------------------------------------------------ lambda, a, period

def survival_at(sample, f):
    """Empirical P(tau > f) (censored trials survive)."""
    s, _ = empirical_survival(sample.times, sample.n_trials, [f])
    return float(s[0])


def empirical_lambda(sample, f, mu_inner=None, confidence=0.99):
    mu = sample.mu if mu_inner is None else mu_inner
    return lambda_estimator(survival_at(sample, f), f, mu, sample.n_trials, confidence)


def default_f(mu_inner, beta=0.9):
    return int(math.ceil(mu_inner ** -beta))


def period(target, sys):
    """tau(A) for a cylinder set, a Bowen ball or a prepared target."""
    return target_period(sys, resolve_target(sys, target))


def a_estimate(sys, target, Delta, M, seed=0, **kw):
    """Empirical P_A(tau_A > tau(A) + Delta) from return gaps."""
    tgt = resolve_target(sys, target)
    if Delta < 0:
        raise ValueError("Delta must be >= 0")
    if tgt.kind == "whole":
        return 0.0
    if Delta >= 1.0 / tgt.mu:
        raise ValueError("Delta must be below 1/mu(A)")
    sample = sample_return_times(sys, tgt, M, seed=seed, **kw)
    tau = target_period(sys, tgt)
    return float((sample.times > tau + Delta).mean())


# ------------------------------------------------------------------ curves

def survival_and_ks(sample, mu_target, lam, grid=None, a=None, tau=None, Delta=None):
    """Rescaled survival curve and its sup-distances to e^-t and a e^-t.

    The second distance is taken over ``t > (tau + Delta) lam mu`` and is
    returned only when ``a``, ``tau`` and ``Delta`` are all given.
    """
    if sample.times.size == 0:
        raise ValueError("sample has no uncensored times")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    grid = np.concatenate([[0.0], grid[grid > 0]])
    scale = lam * mu_target
    values, at_risk = empirical_survival(sample.times, sample.n_trials, grid / scale)
    curve = SurvivalCurve(grid, values, sample.n_trials, lam, mu_target, "Empirical", at_risk,
                          sample.censored_fraction, sample.censored_fraction <= CENSOR_LIMIT,
                          meta={"target": sample.target, "mode": sample.mode,
                                "horizon": sample.horizon})
    expo = np.exp(-grid)
    ks = curve.sup_distance(expo)
    ks_a = None
    if a is not None and tau is not None and Delta is not None:
        ks_a = curve.sup_distance(a * expo, grid > (tau + Delta) * scale)
    return curve, ks, ks_a


def curve_from_exact(exact_curve, mu, lam, grid=None):
    """Rescale an exact raw-time survival curve onto the rescaled grid."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    grid = np.concatenate([[0.0], grid[grid > 0]])
    idx = np.floor(grid / (lam * mu)).astype(np.int64)
    if idx.max() >= exact_curve.values.size:
        raise ValueError("exact curve too short for the grid")
    return SurvivalCurve(grid, exact_curve.values[idx], None, lam, mu, "Exact")


# ------------------------------------------------------------------ entropy

@dataclass(frozen=True)
class EntropyEstimate:
    bk: float
    ow: float
    recurrence: int
    mu_ball: float

    @property
    def censored(self):
        return self.recurrence < 0


def entropy_estimators(sys, epsilon, n, seed=0, stream=0, horizon=None, backend=None):
    """Brin-Katok and Ornstein-Weiss estimates at x = sample_invariant(sys, seed, stream).

    bk = -ln mu(B_{eps,n}(x)) / n; ow = ln R / n with R the first return of
    the orbit of x to its own Bowen ball (``nan`` if beyond ``horizon``).
    """
    k = kernels.get_backend(backend)
    ids = np.array([stream], dtype=np.uint64)
    if sys.kind is SystemKind.DOUBLING:
        x = (stream_word(seed, stream, 0) >> 11) * 2.0 ** -53
        res = resolve_ball(sys, BowenSpec(x, epsilon, n))
        if res.kind == "whole":
            mu, R = 1.0, 1
        else:
            mu = min(1.0, 2.0 * res.radius)
            horizon = horizon or default_horizon(mu)
            center = stream_word(seed, stream, 0)
            R = int(k.doubling_hits(ids, seed, center, int(math.ldexp(res.radius, 64)), 1,
                                    horizon)[0])
    else:
        from .systems import sample_invariant
        x = sample_invariant(sys, seed, stream)
        m = agreement_length(epsilon)
        if m == 0:
            mu, R = 1.0, 1
        else:
            tgt = _words_target(sys, CylinderWord(x.prefix(n - 1 + m)))
            mu = tgt.mu
            horizon = horizon or default_horizon(mu)
            aut = tgt.automaton
            R = int(k.shift_hits(ids, seed, sys.cdf0, sys.cdf, aut.delta,
                                 aut.accept.astype(np.uint8), tgt.length, 1, horizon)[0])
    ow = math.log(R) / n if R > 0 else float("nan")
    return EntropyEstimate(-math.log(mu) / n, ow, R, mu)


# ------------------------------------------------------------------ error bound

def _check_f_range(f, N, mu_ball):
    lo, hi = 2 * N, 0.5 / mu_ball
    if not lo < hi:
        raise EmptyRangeError(f"admissible f-range (2N, 1/(2 mu)) = ({lo}, {hi}) is empty")
    if not lo < f < hi:
        raise EmptyRangeError(f"f = {f} outside the admissible range ({lo}, {hi})")


def mainthm_bound(theta_n, t, s, lam, f, mu_ball, mu_inner, N, alpha_at_N, C5=1.0, C6=1.0):
    """theta t/(s lam) + 2 f mu(B) + C5 s N / f + C6 s alpha(N) / (f mu(B~))."""
    for name, v in (("t", t), ("s", s), ("lambda", lam), ("f", f), ("mu_ball", mu_ball),
                    ("mu_inner", mu_inner), ("N", N)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    if theta_n < 0 or alpha_at_N < 0 or C5 < 0 or C6 < 0:
        raise ValueError("theta, alpha(N), C5 and C6 must be nonnegative")
    _check_f_range(f, N, mu_ball)
    return (theta_n * t / (s * lam) + 2.0 * f * mu_ball + C5 * s * N / f
            + C6 * s * alpha_at_N / (f * mu_inner))


def minimize_mainthm_f(theta_n, t, s, lam, mu_ball, mu_inner, N, alpha_at_N, C5=1.0, C6=1.0):
    """Integer f in (2N, 1/(2 mu)) minimising the bound, and the bound there.

    The bound is c + 2 mu f + B / f, convex in f, minimised at sqrt(B / (2 mu)).
    """
    lo = 2 * N + 1
    hi = math.ceil(0.5 / mu_ball) - 1
    if lo > hi:
        raise EmptyRangeError(f"admissible f-range (2N, 1/(2 mu)) holds no integer")
    B = C5 * s * N + C6 * s * alpha_at_N / mu_inner
    f0 = math.sqrt(B / (2.0 * mu_ball)) if B > 0 else lo
    cands = {min(max(v, lo), hi) for v in (math.floor(f0), math.ceil(f0), lo, hi)}
    args = (theta_n, t, s, lam)
    best = min(cands, key=lambda f: (mainthm_bound(*args, f, mu_ball, mu_inner, N, alpha_at_N,
                                                   C5, C6), f))
    return best, mainthm_bound(*args, best, mu_ball, mu_inner, N, alpha_at_N, C5, C6)


__all__ = [
    "EmptyRangeError", "EntrySample", "EntropyEstimate", "HitTarget", "InsufficientHitsError",
    "LambdaEstimate", "SurvivalCurve", "a_estimate", "curve_from_exact", "default_f",
    "default_horizon", "dkw_bound", "empirical_lambda", "entropy_estimators",
    "higher_order_returns", "kac_statistic", "lambda_estimator", "mainthm_bound",
    "minimize_mainthm_f", "period", "resolve_target", "sample_entry_times",
    "sample_return_times", "survival_and_ks", "survival_at",
]
