"""Survival curves, sup-distances and the DKW envelope."""

from dataclasses import dataclass, field
import math

import numpy as np


def dkw_bound(M, confidence=0.99):
    """Half-width sqrt(ln(2/alpha) / (2M)) of the DKW band, alpha = 1 - confidence."""
    if M < 1:
        raise ValueError("DKW bound needs at least one sample")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * M))


def default_grid(n=200, lo=0.01, hi=10.0):
    """Geometric grid of rescaled times."""
    return np.geomspace(lo, hi, n)


@dataclass
class SurvivalCurve:
    """P(tau > t / (lam mu)) on a grid of rescaled times ``t``.

    Exact curves in raw time use ``lam = mu = None``; ``n_at_risk`` is the
    number of trials still unhit at each grid point (empirical curves only).
    """

    t: np.ndarray
    values: np.ndarray
    n_samples: int = None
    lam: float = None
    mu: float = None
    mode: str = "Empirical"
    n_at_risk: np.ndarray = None
    censored_fraction: float = 0.0
    reliable: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.t.shape != self.values.shape:
            raise ValueError("grid and values differ in shape")

    def sup_distance(self, other_values, mask=None):
        diff = np.abs(self.values - np.asarray(other_values, dtype=np.float64))
        if mask is not None:
            diff = diff[np.asarray(mask)]
        return float(diff.max()) if diff.size else float("nan")


def empirical_survival(times, n_trials, thresholds):
    """Fraction and count of trials with time > threshold.

    ``times`` holds the uncensored hit times; the remaining
    ``n_trials - len(times)`` trials are censored and count as surviving.
    """
    srt = np.sort(np.asarray(times, dtype=np.float64))
    thresholds = np.asarray(thresholds, dtype=np.float64)
    hit_by = np.searchsorted(srt, thresholds, side="right")
    at_risk = n_trials - hit_by
    return at_risk / n_trials, at_risk.astype(np.int64)


@dataclass(frozen=True)
class LambdaEstimate:
    """lambda = -ln P(tau > f) / (f mu), with an interval from the survival band.

    ``value`` is ``nan`` (and ``defined`` false) when the survival is 0 or 1.
    """

    value: float
    f: int
    mu_inner: float
    survival_at_f: float
    half_width: float = 0.0
    lo: float = float("nan")
    hi: float = float("nan")
    mode: str = "Empirical"

    @property
    def defined(self):
        return not math.isnan(self.value)

    @property
    def within_upper_bound(self):
        """lambda <= 2, the bound available when f mu <= 1/2."""
        return self.defined and 0 < self.value <= 2.0


def lambda_estimator(survival_at_f, f, mu_inner, n_samples=None, confidence=0.99,
                     mode="Empirical"):
    if not mu_inner > 0 or not f > 0:
        raise ValueError("f and mu_inner must be positive")
    scale = f * mu_inner
    h = dkw_bound(n_samples, confidence) if n_samples else 0.0
    if not 0 < survival_at_f < 1:
        return LambdaEstimate(float("nan"), f, mu_inner, survival_at_f, h, mode=mode)
    value = -math.log(survival_at_f) / scale
    tiny = 1e-300
    hi_s = min(survival_at_f + h, 1.0)
    lo_s = max(survival_at_f - h, tiny)
    return LambdaEstimate(value, f, mu_inner, survival_at_f, h,
                          lo=-math.log(hi_s) / scale, hi=-math.log(lo_s) / scale, mode=mode)
