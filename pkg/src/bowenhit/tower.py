"""A quotient Young tower with polynomial return-time tail.

Column ``i`` (1-based) has height ``R_i = i`` and base mass
``nu_i ~ i^-(lambda+1)``, truncated at ``i_max`` and renormalised. The
induced base map is the full shift on column indices with product measure
``nu``, so a point is (column, level, future columns). The invariant (SRB)
measure gives cell (i, j) the mass ``nu_i / E[R]``.

Random layout of a tower orbit on stream ``s``: uniform 0 picks the
starting column from the SRB column law, uniform 1 the level, and uniform
``l + 1`` the ``l``-th future column (l >= 1).
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special, stats

from . import kernels
from .automaton import PatternAutomaton
from .hitting import (EntrySample, _chunked, default_f, default_horizon, survival_and_ks,
                      survival_at)
from .measure import MeasureMode, MeasureValue, hoeffding_half_width
from .streams import AUX_STREAM_BASE, invcdf, stream_keys_np, uniform, uniforms_np
from .survival import dkw_bound, lambda_estimator
from .symbolic import BowenSpec
from .systems import ShiftPoint

# Below this tail exponent the exponential law is not claimed.
LAW_THRESHOLD = 5.0 + math.sqrt(15.0)


@dataclass(frozen=True, eq=False)
class TowerSpec:
    lambda_tail: float = 9.0
    i_max: int = 10_000
    gamma: float = 0.5
    heights: np.ndarray = field(init=False, repr=False)
    nu: np.ndarray = field(init=False, repr=False)
    col_cdf: np.ndarray = field(init=False, repr=False)
    srb_cdf: np.ndarray = field(init=False, repr=False)
    mean_return: float = field(init=False)
    norm: float = field(init=False, repr=False)

    is_tower = True

    def __post_init__(self):
        if not self.lambda_tail > 1:
            raise ValueError("lambda_tail must exceed 1")
        if int(self.i_max) < 2:
            raise ValueError("i_max must be >= 2")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        i = np.arange(1, int(self.i_max) + 1, dtype=np.float64)
        w = i ** -(self.lambda_tail + 1.0)
        norm = math.fsum(w)
        nu = w / norm
        mean_return = math.fsum(i * nu)
        col_cdf = np.cumsum(nu)
        col_cdf[-1] = 1.0
        srb_cdf = np.cumsum(i * nu / mean_return)
        srb_cdf[-1] = 1.0
        for name, v in (("heights", i.astype(np.int64)), ("nu", nu), ("col_cdf", col_cdf),
                        ("srb_cdf", srb_cdf), ("mean_return", mean_return), ("norm", norm)):
            object.__setattr__(self, name, v)

    def height(self, column):
        return int(column)

    def cell_mass(self, column):
        """SRB mass of any single level of ``column``."""
        return float(self.nu[column - 1] / self.mean_return)

    @property
    def base_mass(self):
        return 1.0 / self.mean_return

    @property
    def tail_constant(self):
        """c in nu(R > j) ~ c j^-lambda."""
        return 1.0 / (self.lambda_tail * self.norm)

    def tail(self, j):
        """nu(R > j)."""
        j = int(j)
        return float(self.nu[j:].sum()) if j < self.i_max else 0.0

    def omega(self, m):
        """sqrt(sum_{R_i > m} R_i nu_i)."""
        m = int(m)
        if m >= self.i_max:
            return 0.0
        return math.sqrt(float((self.heights[m:] * self.nu[m:]).sum()))

    def truncation_report(self):
        """Mass and mean-return contributions of the columns cut off at i_max."""
        s = self.lambda_tail
        lost_mass = float(special.zeta(s + 1.0, self.i_max + 1)) / self.norm
        lost_mean = float(special.zeta(s, self.i_max + 1)) / self.norm
        return {"i_max": int(self.i_max), "relative_mass_beyond": lost_mass,
                "mean_return_beyond": lost_mean,
                "relative_mean_return_error": lost_mean / self.mean_return}

    def to_config(self):
        return {"lambda_tail": self.lambda_tail, "i_max": int(self.i_max), "gamma": self.gamma}


# ------------------------------------------------------------------ points

class ColumnSource:
    """Future columns of a tower orbit; address index ``a`` is uniform ``a + 2``."""

    def __init__(self, spec, seed, stream):
        self.spec = spec
        self.seed = int(seed)
        self.stream = int(stream)

    def symbol(self, pos, prev):
        return 1 + invcdf(self.spec.col_cdf, uniform(self.seed, self.stream, pos + 2))


@dataclass(frozen=True, eq=False)
class TowerPoint:
    column: int
    level: int
    address: ShiftPoint

    def __post_init__(self):
        if not 0 <= self.level < self.column:
            raise ValueError(f"level {self.level} outside column {self.column}")


def tower_step(spec, pt):
    if pt.level < spec.height(pt.column) - 1:
        return TowerPoint(pt.column, pt.level + 1, pt.address)
    return TowerPoint(pt.address[0], 0, pt.address.shifted())


def sample_srb(spec, seed, stream):
    c = 1 + invcdf(spec.srb_cdf, uniform(seed, stream, 0))
    level = int(math.floor(uniform(seed, stream, 1) * c))
    return TowerPoint(c, level, ShiftPoint((), ColumnSource(spec, seed, stream)))


def separation(spec, x, y, window=64):
    """0 for different cells, else 1 + agreement length of the base addresses."""
    if (x.column, x.level) != (y.column, y.level):
        return 0
    k = 0
    while k < window and x.address[k] == y.address[k]:
        k += 1
    return 1 + k


def tower_distance(spec, x, y, window=64):
    return spec.gamma ** separation(spec, x, y, window)


def required_separation(spec, epsilon):
    """Least s with gamma^s < epsilon."""
    s = 0
    while spec.gamma ** s >= epsilon:
        s += 1
    return s


# ------------------------------------------------------------------ Bowen balls

@dataclass(frozen=True, eq=False)
class TowerBall:
    """B_{eps,n}(x) in the separation metric: a cylinder of the column sequence.

    ``word`` lists the centre column then the next ``K`` columns; a point
    lies in the ball iff it sits at ``level`` of column ``word[0]`` and
    its next ``K`` columns equal ``word[1:]``.
    """

    word: tuple
    level: int
    mu: float
    s_req: int
    returns: int

    @property
    def whole(self):
        return not self.word

    @property
    def K(self):
        return len(self.word) - 1


def tower_ball(spec, center, epsilon, n):
    s_req = required_separation(spec, epsilon)
    if s_req == 0:
        return TowerBall((), 0, 1.0, 0, 0)
    # base returns of the centre during steps 1..n-1
    returns, lv, col = 0, center.level, center.column
    for _ in range(n - 1):
        if lv < col - 1:
            lv += 1
        else:
            col = center.address[returns]
            returns += 1
            lv = 0
    K = returns + s_req - 1
    word = (center.column,) + center.address.prefix(K)
    mu = spec.cell_mass(word[0]) * math.prod(float(spec.nu[a - 1]) for a in word[1:])
    return TowerBall(word, center.level, mu, s_req, returns)


def tower_ball_contains(spec, center, epsilon, n, y):
    """Direct check of d(F^k x, F^k y) < eps for k < n."""
    x = center
    for k in range(n):
        if k:
            x, y = tower_step(spec, x), tower_step(spec, y)
        if not tower_distance(spec, x, y) < epsilon:
            return False
    return True


def _as_ball(spec, target):
    if isinstance(target, TowerBall):
        return target
    if isinstance(target, BowenSpec):
        return tower_ball(spec, target.center, target.epsilon, target.n)
    raise TypeError("tower targets are TowerBall or BowenSpec with a TowerPoint centre")


def _srb_arrays(spec, keys):
    c = np.searchsorted(spec.srb_cdf, uniforms_np(keys, 0), side="right")
    j = np.floor(uniforms_np(keys, 1) * spec.heights[c]).astype(np.int64)
    return c, j


def tower_ball_measure(spec, target, mode=MeasureMode.EXACT, n_samples=10_000, seed=0,
                       confidence=0.99):
    """Exact product measure, or the fraction of SRB samples in the ball."""
    ball = _as_ball(spec, target)
    if MeasureMode(mode) is MeasureMode.EXACT:
        return MeasureValue(ball.mu)
    if ball.whole:
        inside = n_samples
    else:
        keys = stream_keys_np(seed, AUX_STREAM_BASE + np.arange(n_samples, dtype=np.uint64))
        c, j = _srb_arrays(spec, keys)
        ok = (c == ball.word[0] - 1) & (j == ball.level)
        for a, col in enumerate(ball.word[1:]):
            idx = np.flatnonzero(ok)
            if idx.size == 0:
                break
            nxt = np.searchsorted(spec.col_cdf, uniforms_np(keys[idx], a + 2), side="right")
            ok[idx[nxt != col - 1]] = False
        inside = int(ok.sum())
    return MeasureValue(inside / n_samples, MeasureMode.MONTE_CARLO, n_samples,
                        hoeffding_half_width(n_samples, confidence))


# ------------------------------------------------------------------ hitting

def _kernel_args(spec, ball):
    distinct = sorted(set(ball.word))
    code = {col: k + 1 for k, col in enumerate(distinct)}
    cmap = np.zeros(int(spec.i_max), dtype=np.int32)
    for col, k in code.items():
        cmap[col - 1] = k
    aut = PatternAutomaton([tuple(code[c] for c in ball.word)], len(distinct) + 1)
    pre_dur = sum(ball.word[:-1])
    return cmap, aut, pre_dur


def tower_entry_times(spec, target, M, horizon=None, seed=0, workers=1, backend=None, order=1):
    ball = _as_ball(spec, target)
    if horizon is None:
        horizon = order * default_horizon(ball.mu)
    label = "whole" if ball.whole else f"tower{ball.word[:6]}..level{ball.level}"
    if ball.whole:
        raw = np.full(M, order, dtype=np.int64)
    else:
        k = kernels.get_backend(backend)
        cmap, aut, pre_dur = _kernel_args(spec, ball)

        def fn(chunk):
            return k.tower_hits(chunk, seed, spec.col_cdf, spec.srb_cdf, spec.heights, cmap,
                                aut.delta, aut.accept.astype(np.uint8), pre_dur, ball.level,
                                order, horizon)
        raw = _chunked(fn, np.arange(M, dtype=np.uint64), workers)
    times = raw[raw > 0]
    return EntrySample(times, int(M - times.size), int(horizon), label, "Entry", int(M), ball.mu,
                       int(seed))


@dataclass
class TowerExperiment:
    curve: object
    ks: float
    lam: object
    mu: float
    sample: EntrySample
    asserted: bool
    dkw: float
    non_principal: dict


def tower_hitting_experiment(spec, target, M=20_000, horizon=None, seed=0, workers=1,
                             beta=0.9, eta=0.45, grid=None, backend=None):
    """Rescaled entry survival against e^-t on a tower Bowen ball.

    The ball is a single cylinder, so its inner approximation is itself and
    lambda is estimated at f = ceil(mu^-beta) from the same sample.
    """
    ball = _as_ball(spec, target)
    sample = tower_entry_times(spec, ball, M, horizon, seed, workers, backend)
    if ball.whole:
        lam = lambda_estimator(0.5, 1, 1.0)
        curve, ks, _ = survival_and_ks(sample, 1.0, 1.0, grid)
        return TowerExperiment(curve, ks, lam, 1.0, sample, False, dkw_bound(M), {})
    f = default_f(ball.mu, beta)
    lam = lambda_estimator(survival_at(sample, f), f, ball.mu, M)
    curve, ks, _ = survival_and_ks(sample, ball.mu, lam.value, grid)
    curve.meta.update({"tower": spec.to_config(), "word_length": len(ball.word)})
    return TowerExperiment(curve, ks, lam, ball.mu, sample, spec.lambda_tail > LAW_THRESHOLD,
                           dkw_bound(M), non_principal_mass(spec, ball.mu, eta, n=None))


# ------------------------------------------------------------------ checks

def non_principal_mass(spec, mu_ball, eta=0.45, alpha_exp=0.5, n=None):
    """SRB mass of tall columns (R > m) plus the mass cut off at i_max.

    N = ceil(mu^-eta) and m = ceil(N^alpha_exp). Also reports
    sqrt(n + 2) omega(m) when ``n`` is given.
    """
    N = math.ceil(mu_ball ** -eta)
    m = math.ceil(N ** alpha_exp)
    tall = float((spec.heights[m:] * spec.nu[m:]).sum() / spec.mean_return) if m < spec.i_max else 0.0
    cut = spec.truncation_report()["relative_mass_beyond"]
    out = {"N": N, "m": m, "tall_mass": tall, "truncated_mass": cut, "total": tall + cut,
           "omega_m": spec.omega(m)}
    if n is not None:
        out["omega_bound"] = math.sqrt(n + 2) * spec.omega(m)
    return out


def push_forward(spec, n_samples, k, seed=0, stream_base=AUX_STREAM_BASE):
    """Columns and levels of n SRB samples after k tower steps."""
    keys = stream_keys_np(seed, stream_base + np.arange(n_samples, dtype=np.uint64))
    c, j = _srb_arrays(spec, keys)
    ell = np.zeros(n_samples, dtype=np.int64)
    for _ in range(k):
        top = j >= spec.heights[c] - 1
        j = np.where(top, 0, j + 1)
        idx = np.flatnonzero(top)
        if idx.size:
            ell[idx] += 1
            c[idx] = np.searchsorted(spec.col_cdf, uniforms_np(keys[idx], ell[idx] + 1),
                                     side="right")
    return c + 1, j


def occupancy_chi2(spec, n_samples=1_000_000, k=50, seed=0, min_expected=50.0):
    """Chi-square test of cell occupancy after k steps against nu_i / E[R].

    Cells with expected count below ``min_expected`` are pooled into one.
    """
    cols, levels = push_forward(spec, n_samples, k, seed)
    expected_cell = n_samples * spec.nu / spec.mean_return
    big = np.flatnonzero(expected_cell >= min_expected) + 1
    obs, exp = [], []
    for col in big:
        counts = np.bincount(levels[cols == col], minlength=col)
        obs.extend(counts.tolist())
        exp.extend([expected_cell[col - 1]] * col)
    rest_obs = n_samples - sum(obs)
    rest_exp = n_samples - sum(exp)
    if rest_exp > 0:
        obs.append(rest_obs)
        exp.append(rest_exp)
    obs, exp = np.array(obs, dtype=np.float64), np.array(exp)
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    dof = obs.size - 1
    return {"chi2": chi2, "dof": dof, "p_value": float(stats.chi2.sf(chi2, dof)),
            "cells": int(obs.size)}


def tail_law_ratios(spec, js):
    """nu(R > j) / (c j^-lambda) for each j."""
    return np.array([spec.tail(j) / (spec.tail_constant * j ** -spec.lambda_tail) for j in js])


def empirical_tail(spec, js, n_samples, seed=0):
    """Fraction of nu-samples with R > j."""
    keys = stream_keys_np(seed, AUX_STREAM_BASE + np.arange(n_samples, dtype=np.uint64))
    cols = 1 + np.searchsorted(spec.col_cdf, uniforms_np(keys, 2), side="right")
    return np.array([(cols > j).mean() for j in js])
