import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bowenhit import streams
from bowenhit.survival import dkw_bound
from bowenhit.systems import (ShiftPoint, SystemDescriptor, distance, iterate, sample_invariant,
                              step)


def test_doubling_step_examples(doubling):
    assert step(doubling, 0.3) == pytest.approx(0.6)
    assert step(doubling, 0.75) == 0.5
    assert step(doubling, 0.5) == 0.0


def test_shift_step_is_left_shift(fair):
    x = ShiftPoint.periodic((1, 0))
    y = step(fair, x)
    assert y.prefix(3) == (0, 1, 0)
    assert y.offset == 1


def test_distance_examples(fair, doubling):
    x = ShiftPoint((1, 0, 1, 0))
    y = ShiftPoint((1, 0, 0, 0))
    assert distance(fair, x, y) == 0.25
    assert distance(doubling, 0.9, 0.05) == pytest.approx(0.15)
    assert distance(doubling, 0.4, 0.4) == 0.0
    p = ShiftPoint.periodic((0, 1, 1))
    assert distance(fair, p, ShiftPoint.periodic((0, 1, 1))) == 0.0


def test_descriptor_validation():
    with pytest.raises(ValueError):
        SystemDescriptor.bernoulli((0.5, 0.5 + 1e-9))
    SystemDescriptor.bernoulli((0.5, 0.5 + 1e-13))
    with pytest.raises(ValueError):
        SystemDescriptor.markov([[0.9, 0.2], [0.2, 0.8]])
    with pytest.raises(ValueError):
        SystemDescriptor.markov([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    m = SystemDescriptor.markov([[0.9, 0.1], [0.2, 0.8]])
    assert np.allclose(m.pi, [2 / 3, 1 / 3], atol=1e-12)
    assert np.abs(m.pi @ np.array(m.P) - m.pi).max() < 1e-10


def test_sample_invariant_deterministic(fair):
    a = sample_invariant(fair, 11, 4).prefix(200)
    b = sample_invariant(fair, 11, 4).prefix(200)
    assert a == b
    assert a != sample_invariant(fair, 11, 5).prefix(200)


def _first_symbols(sys, seed, n):
    keys = streams.stream_keys_np(seed, np.arange(n, dtype=np.uint64))
    return np.searchsorted(sys.cdf0, streams.uniforms_np(keys, 0), side="right")


def test_markov_stationary_frequency(markov):
    n = 10 ** 6
    sym = _first_symbols(markov, 3, n)
    # the vectorised draw agrees with the lazy point
    assert sym[17] == sample_invariant(markov, 3, 17)[0]
    sigma = math.sqrt((2 / 3) * (1 / 3) / n)
    assert abs((sym == 0).mean() - 2 / 3) <= 3 * sigma


def test_doubling_uniform_mean(doubling):
    n = 10 ** 6
    keys = streams.stream_keys_np(5, np.arange(n, dtype=np.uint64))
    x = (streams.words_np(keys, 0) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    assert x[9] == sample_invariant(doubling, 5, 9)
    sigma = math.sqrt(1 / 12 / n)
    assert abs(x.mean() - 0.5) <= 3 * sigma


def test_doubling_invariance_ks(doubling):
    n = 10 ** 6
    keys = streams.stream_keys_np(8, np.arange(2 * n, dtype=np.uint64))
    x = (streams.words_np(keys, 0) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    a, b = np.sort(x[:n]), np.sort(np.mod(2.0 * x[n:], 1.0))
    grid = np.linspace(0, 1, 2001)
    ks = np.abs(np.searchsorted(a, grid) - np.searchsorted(b, grid)).max() / n
    # two-sample band: sqrt(2) times the one-sample DKW half-width at 99.9%
    assert ks <= math.sqrt(2) * dkw_bound(n, 0.999)


def test_shift_invariance_ks(markov):
    n = 200_000
    first = [sample_invariant(markov, 2, i)[0] for i in range(n // 20)]
    second = [sample_invariant(markov, 2, i)[1] for i in range(n // 20)]
    m = len(first)
    assert abs(np.mean(first) - np.mean(second)) <= math.sqrt(2) * dkw_bound(m, 0.999)


words = st.lists(st.integers(0, 1), min_size=1, max_size=12)


@given(words, words, words)
def test_shift_metric_axioms(a, b, c):
    sys = SystemDescriptor.bernoulli((0.5, 0.5))
    x, y, z = (ShiftPoint.periodic(w) for w in (a, b, c))
    dxy, dyx = distance(sys, x, y), distance(sys, y, x)
    assert dxy == dyx
    assert distance(sys, x, x) == 0
    assert distance(sys, x, z) <= dxy + distance(sys, y, z) + 1e-15


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True),
       st.floats(0, 1, exclude_max=True))
def test_circle_metric_axioms(x, y, z):
    sys = SystemDescriptor.doubling()
    assert distance(sys, x, y) == distance(sys, y, x)
    assert distance(sys, x, z) <= distance(sys, x, y) + distance(sys, y, z) + 1e-15


@given(st.integers(0, 2 ** 32), st.integers(0, 30), st.integers(1, 20))
def test_step_commutes_with_extension(seed, k, length):
    sys = SystemDescriptor.bernoulli((0.3, 0.7))
    x = sample_invariant(sys, seed, 1)
    shifted = iterate(sys, x, k).prefix(length)
    fresh = sample_invariant(sys, seed, 1).prefix(k + length)[k:]
    assert shifted == fresh


def test_extension_keeps_materialised_symbols(fair):
    x = sample_invariant(fair, 1, 1)
    head = x.prefix(10)
    x.prefix(1000)
    assert x.materialized[:10] == head
