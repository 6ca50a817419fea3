import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bowenhit.automaton import PatternAutomaton
from bowenhit.hitting import sample_entry_times
from bowenhit.measure import cylinder_measure
from bowenhit.oracle import (BoundViolation, StateBlowupError, exact_conditional_survival,
                             exact_entry_mean, exact_kac_mean, exact_lambda, exact_survival,
                             period, target_measure)
from bowenhit.survival import dkw_bound, empirical_survival
from bowenhit.symbolic import WordSet
from bowenhit.systems import SystemDescriptor


def _weight(sys, y):
    return cylinder_measure(sys, y).value


def brute_survival(sys, words, t, conditional=False):
    """P(no target occurrence starting at 1..t) by enumerating all strings."""
    L = len(words[0])
    A = sys.alphabet_size
    total = 0.0
    norm = 0.0
    for y in itertools.product(range(A), repeat=t + L):
        if conditional and y[:L] not in words:
            continue
        w = _weight(sys, y)
        norm += w
        if not any(y[k:k + L] in words for k in range(1, t + 1)):
            total += w
    return total / norm


def brute_period(sys, words):
    L = len(words[0])
    for k in range(1, 4 * L + 8):
        for z in itertools.product(range(sys.alphabet_size), repeat=k + L):
            if z[:L] in words and z[k:k + L] in words and _weight(sys, z) > 0:
                return k
    raise AssertionError("no return found")


def test_survival_examples(fair):
    s = exact_survival(fair, (1, 1), 3).values
    assert s[0] == 1.0
    assert s[1] == pytest.approx(0.75, abs=1e-15)
    assert s[2] == pytest.approx(0.625, abs=1e-15)


def test_conditional_examples(fair):
    _, a, tau = exact_conditional_survival(fair, (1, 1), 1)
    assert tau == 1 and a == pytest.approx(0.5, abs=1e-15)
    _, a0, _ = exact_conditional_survival(fair, (1, 1), 0)
    assert 0 <= a0 <= 1
    assert exact_conditional_survival(fair, (0, 1), 1)[2] == 2


def test_kac_examples(fair, markov):
    assert exact_kac_mean(fair, (1, 1)) == pytest.approx(4.0, rel=1e-12)
    assert exact_kac_mean(fair, (0,)) == pytest.approx(2.0, rel=1e-12)
    assert exact_kac_mean(markov, (0, 1)) == pytest.approx(15.0, rel=1e-12)


def test_lambda_examples(fair):
    assert exact_lambda(fair, (1, 1), 1).value == pytest.approx(-math.log(0.75) / 0.25, abs=1e-12)
    assert exact_lambda(fair, (1, 1), 1).value == pytest.approx(1.1507, abs=1e-4)
    with pytest.raises(ValueError):
        exact_lambda(fair, (1, 1), 3)


def test_lambda_bound_violation_is_raised(monkeypatch, fair):
    import bowenhit.oracle as oracle
    real = oracle.exact_survival

    def fake(sys, target, t_max):
        c = real(sys, target, t_max)
        c.values[t_max] = 0.3
        return c
    monkeypatch.setattr(oracle, "exact_survival", fake)
    with pytest.raises(BoundViolation):
        oracle.exact_lambda(fair, (1, 1), 2)


def test_period_examples(fair, markov):
    assert period((0, 0, 0), fair) == 1
    assert period((0, 1), fair) == 2
    assert period((0, 0, 1, 1), fair) == 4
    forbidden = SystemDescriptor.markov([[0.0, 1.0], [0.5, 0.5]])
    assert period((0, 1), forbidden) == 2
    assert period((1, 0), forbidden) == 2


@pytest.mark.parametrize("sysname", ["fair", "skew", "markov"])
def test_survival_matches_enumeration(sysname, fair, markov):
    sys = {"fair": fair, "markov": markov,
           "skew": SystemDescriptor.bernoulli((0.3, 0.7))}[sysname]
    for words in ([(1, 1)], [(0, 1, 0)], [(0, 0), (1, 0)], [(1, 0, 1, 1)]):
        ws = WordSet(words)
        curve = exact_survival(sys, ws, 6).values
        ccurve, _, _ = exact_conditional_survival(sys, ws, 0, 6)
        for t in range(7):
            assert curve[t] == pytest.approx(brute_survival(sys, words, t), abs=1e-12)
            assert ccurve.values[t] == pytest.approx(
                brute_survival(sys, words, t, conditional=True), abs=1e-12)


@pytest.mark.parametrize("sysname", ["fair", "markov", "forbidden"])
def test_kac_exact_all_short_targets(sysname, fair, markov):
    sys = {"fair": fair, "markov": markov,
           "forbidden": SystemDescriptor.markov([[0.0, 1.0], [0.4, 0.6]])}[sysname]
    worst = 0.0
    for L in range(1, 9):
        for w in itertools.product((0, 1), repeat=L):
            mu = target_measure(sys, w)
            if mu == 0:
                continue
            worst = max(worst, abs(exact_kac_mean(sys, w) * mu - 1.0))
    assert worst <= 1e-9


def test_entry_mean_matches_series(fair):
    curve = exact_survival(fair, (1, 0, 1), 3000).values
    assert exact_entry_mean(fair, (1, 0, 1)) == pytest.approx(curve.sum(), rel=1e-9)


@given(st.lists(st.lists(st.integers(0, 1), min_size=3, max_size=3), min_size=1, max_size=4))
def test_period_matches_brute_force(words):
    sys = SystemDescriptor.markov([[0.0, 1.0], [0.5, 0.5]])
    words = sorted({tuple(w) for w in words if cylinder_measure(sys, w).value > 0})
    if not words:
        return
    assert period(WordSet(words), sys) == brute_period(sys, words)
    full = SystemDescriptor.bernoulli((0.5, 0.5))
    assert period(WordSet(words), full) == brute_period(full, words)
    assert 1 <= period(WordSet(words), full) <= 3


@given(st.lists(st.integers(0, 1), min_size=1, max_size=6), st.integers(0, 5))
def test_a_nonincreasing_in_delta(w, d):
    sys = SystemDescriptor.bernoulli((0.5, 0.5))
    _, a1, _ = exact_conditional_survival(sys, tuple(w), d)
    _, a2, _ = exact_conditional_survival(sys, tuple(w), d + 1)
    assert a2 <= a1 + 1e-15 and 0 <= a2 <= 1


@given(st.lists(st.integers(0, 1), min_size=1, max_size=7),
       st.sampled_from([(0.5, 0.5), (0.2, 0.8)]))
def test_envelope(w, p):
    sys = SystemDescriptor.bernoulli(p)
    mu = target_measure(sys, tuple(w))
    s = exact_survival(sys, tuple(w), 200).values
    t = np.arange(s.size)
    assert np.all(1.0 - s <= t * mu + 1e-12)
    assert np.all(np.diff(s) <= 1e-15)


def test_state_blowup():
    sys = SystemDescriptor.bernoulli((0.5, 0.5))
    words = [tuple(int(b) for b in format(i, "018b")) for i in range(0, 2 ** 18, 2)]
    with pytest.raises(StateBlowupError):
        exact_survival(sys, WordSet(words), 2)


def test_doubling_uses_fair_coding(doubling, fair):
    assert np.array_equal(exact_survival(doubling, (0, 1, 1), 20).values,
                          exact_survival(fair, (0, 1, 1), 20).values)


def test_oracle_against_simulation_random_targets(fair, markov):
    rng = np.random.default_rng(2024)
    M = 100_000
    band = dkw_bound(M, 0.999)
    for i in range(10):
        sys = fair if i % 2 == 0 else markov
        L = int(rng.integers(1, 6))
        w = tuple(int(b) for b in rng.integers(0, 2, size=L))
        sample = sample_entry_times(sys, w, M, horizon=2000, seed=100 + i)
        exact = exact_survival(sys, w, 2000).values
        emp, _ = empirical_survival(sample.times, M, np.arange(2001))
        assert np.abs(emp - exact).max() <= band, (w, np.abs(emp - exact).max())


# ------------------------------------------------------------------ automaton

@given(st.lists(st.lists(st.integers(0, 2), min_size=1, max_size=5), min_size=1, max_size=6),
       st.lists(st.integers(0, 2), max_size=40))
def test_automaton_finds_all_occurrences(words, text):
    words = [tuple(w) for w in words]
    aut = PatternAutomaton(words, 3)
    assert aut.n_states <= 1 + sum(map(len, words))
    ends = [k for k in range(len(text))
            if any(tuple(text[k + 1 - len(w):k + 1]) == w for w in words if k + 1 >= len(w))]
    assert list(aut.occurrences(text)) == ends
    for state in range(aut.n_states):
        for w in words:
            assert aut.accept[aut.run(w, state)]
