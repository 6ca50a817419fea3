import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bowenhit.measure import (AlphaForm, AlphaModel, MeasureMode, alpha_coefficient, alpha_scan,
                              bowen_measure, cylinder_measure, fit_geometric, phi,
                              s_parameter, second_eigenvalue_modulus)
from bowenhit.symbolic import BowenSpec
from bowenhit.systems import ShiftPoint, SystemDescriptor, sample_invariant


def test_cylinder_measure_examples(fair, markov, doubling):
    assert cylinder_measure(fair, (0, 1, 0)).value == 0.125
    assert cylinder_measure(markov, (0, 1)).value == pytest.approx(1 / 15, rel=1e-12)
    assert cylinder_measure(doubling, (1, 1)).value == 0.25


def test_bowen_measure_examples(doubling, fair):
    # the stated closed form 2 eps 2^-(n-1) evaluates to 2^-13
    m = bowen_measure(doubling, BowenSpec(0.3, 2 ** -5, 10)).value
    assert m == 2 * 2 ** -5 * 2 ** -9 == 2 ** -13
    x = sample_invariant(fair, 0, 0)
    assert bowen_measure(fair, BowenSpec(x, 2 ** -3, 5)).value == 0.00390625
    assert bowen_measure(fair, BowenSpec(x, 1.5, 1)).value == 1.0
    assert bowen_measure(doubling, BowenSpec(0.3, 1.0, 1)).value == 1.0


def test_bowen_measure_monte_carlo_agrees(fair):
    x = sample_invariant(fair, 2, 0)
    spec = BowenSpec(x, 0.3, 2)
    exact = bowen_measure(fair, spec).value
    mc = bowen_measure(fair, spec, MeasureMode.MONTE_CARLO, n_samples=4000, seed=5)
    assert abs(mc.value - exact) <= mc.half_width


@pytest.mark.parametrize("L", [1, 3, 6])
def test_cylinder_measures_sum_to_one(markov, fair, L):
    for sys in (markov, fair, SystemDescriptor.bernoulli((0.2, 0.3, 0.5))):
        words = itertools.product(range(sys.alphabet_size), repeat=L)
        assert math.fsum(cylinder_measure(sys, w).value for w in words) == pytest.approx(1, abs=1e-12)


@given(st.lists(st.integers(0, 2), min_size=1, max_size=8),
       st.lists(st.integers(0, 2), min_size=1, max_size=8))
def test_bernoulli_multiplicative(u, v):
    sys = SystemDescriptor.bernoulli((0.2, 0.3, 0.5))
    uv = cylinder_measure(sys, tuple(u) + tuple(v)).value
    assert uv == pytest.approx(cylinder_measure(sys, u).value * cylinder_measure(sys, v).value,
                               rel=1e-12)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=8))
def test_markov_cylinder_consistency(w):
    sys = SystemDescriptor.markov([[0.9, 0.1], [0.2, 0.8]])
    w = tuple(w)
    ext = sum(cylinder_measure(sys, w + (a,)).value for a in (0, 1))
    assert ext == pytest.approx(cylinder_measure(sys, w).value, rel=1e-12)
    pre = sum(cylinder_measure(sys, (a,) + w).value for a in (0, 1))
    assert pre == pytest.approx(cylinder_measure(sys, w).value, rel=1e-12)


def test_phi_examples(doubling, fair):
    assert phi(doubling, 0.1, 0.01, 0.4) == pytest.approx(0.2)
    x = sample_invariant(fair, 0, 0)
    # boundary case of the strict rule, see the decisions ledger
    assert phi(fair, 2 ** -3 + 2 ** -5, 2 ** -5, x) == 0.5
    assert phi(fair, 2 ** -3 + 2 ** -5, 2 ** -6, x) == 0.0
    vals = [phi(doubling, 0.1, d, 0.3) for d in (1e-2, 1e-4, 1e-8)]
    assert vals == sorted(vals, reverse=True) and vals[-1] < 1e-6
    with pytest.raises(ValueError):
        phi(doubling, 0.1, 0.2, 0.3)


def test_alpha_bernoulli_zero(fair):
    assert all(alpha_coefficient(fair, k).value <= 1e-12 for k in range(1, 21))


def test_alpha_markov_rate(markov):
    ks, a = alpha_scan(markov, range(1, 16))
    assert np.all(np.diff(a) <= 0)
    ratios = a[5:15] / a[4:14]
    assert np.all(np.abs(ratios - 0.7) <= 0.14)
    model = fit_geometric(ks[4:], a[4:])
    assert model.form is AlphaForm.GEOMETRIC
    assert abs(model.param - 0.7) <= 0.14
    assert second_eigenvalue_modulus(markov) == pytest.approx(0.7)


def test_alpha_markov_against_enumeration():
    # brute force over all cylinder pairs of length <= 3
    sys = SystemDescriptor.markov([[0.6, 0.4], [0.3, 0.7]])
    P = np.array(sys.P)
    k = 2
    best = 0.0
    for la, lb in itertools.product(range(1, 4), repeat=2):
        for a in itertools.product((0, 1), repeat=la):
            for b in itertools.product((0, 1), repeat=lb):
                ma, mb = cylinder_measure(sys, a).value, cylinder_measure(sys, b).value
                Pk = np.linalg.matrix_power(P, k + 1)
                joint = ma * Pk[a[-1], b[0]] / sys.pi[b[0]] * mb
                best = max(best, abs(joint - ma * mb))
    assert alpha_coefficient(sys, k, L=3).value == pytest.approx(best, rel=1e-12)


def test_s_parameter_examples():
    assert s_parameter(AlphaModel(AlphaForm.ZERO), 0.01, 50) == 50
    assert s_parameter(AlphaModel("Polynomial", 1.0, 1.0), 1e-6, 100) == 226
    assert s_parameter(AlphaModel("Geometric", 1.0, 0.5), 2 ** -10, 10) == 21
    with pytest.raises(ValueError):
        s_parameter(AlphaModel("Geometric", 1.0, 0.5), 0.1, 10, c_prime=1.0)


@given(st.floats(1e-9, 0.5), st.floats(1e-9, 0.5), st.sampled_from(["Geometric", "Polynomial"]))
def test_alpha_inverse_monotone(u, v, form):
    m = AlphaModel(form, 1.0, 0.6 if form == "Geometric" else 1.5)
    lo, hi = sorted((u, v))
    assert m.inverse(lo) >= m.inverse(hi)
    k = m.inverse(lo)
    assert m(k) <= lo * (1 + 1e-12)
    if k > 1:
        assert m(k - 1) > lo


def test_alpha_model_config_roundtrip():
    m = AlphaModel("Polynomial", 2.0, 0.5)
    assert AlphaModel.from_config(m.to_config()) == m
    with pytest.raises(ValueError):
        AlphaModel("Geometric", 1.0, 1.5)
