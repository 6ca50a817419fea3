import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bowenhit.measure import MeasureMode, bowen_measure
from bowenhit.survival import dkw_bound
from bowenhit.symbolic import BowenSpec
from bowenhit.systems import ShiftPoint
from bowenhit.tower import (LAW_THRESHOLD, TowerBall, TowerPoint, TowerSpec, empirical_tail,
                            non_principal_mass, occupancy_chi2, push_forward, sample_srb,
                            separation, tail_law_ratios, tower_ball, tower_ball_contains,
                            tower_distance, tower_entry_times, tower_hitting_experiment,
                            tower_step)

SPEC = TowerSpec(9.0, 10_000)


def _pt(col, lev, future):
    return TowerPoint(col, lev, ShiftPoint(tuple(future) + (1,) * 64))


def test_step_examples():
    assert tower_step(SPEC, _pt(3, 1, (2, 5))).level == 2
    nxt = tower_step(SPEC, _pt(3, 2, (2, 5)))
    assert (nxt.column, nxt.level, nxt.address[0]) == (2, 0, 5)
    nxt = tower_step(SPEC, _pt(1, 0, (4, 7)))
    assert (nxt.column, nxt.level) == (4, 0)
    with pytest.raises(ValueError):
        TowerPoint(2, 2, ShiftPoint((1,)))


def test_srb_base_cell_against_zeta():
    mpmath.mp.dps = 30
    z10 = mpmath.fsum(mpmath.mpf(i) ** -10 for i in range(1, 10_001))
    z9 = mpmath.fsum(mpmath.mpf(i) ** -9 for i in range(1, 10_001))
    ref = float(1 / z9)  # nu_1 / E[R] = (1 / z10) / (z9 / z10)
    assert SPEC.cell_mass(1) == pytest.approx(ref, rel=1e-10)
    assert SPEC.mean_return == pytest.approx(float(z9 / z10), rel=1e-12)
    assert round(SPEC.cell_mass(1), 3) == 0.998
    assert SPEC.mean_return * SPEC.base_mass == pytest.approx(1.0, abs=1e-15)
    trunc = SPEC.truncation_report()
    assert trunc["relative_mass_beyond"] == pytest.approx(
        float(mpmath.zeta(10, 10_001) / z10), rel=1e-8)


def test_srb_levels_are_uniform_per_column():
    cols, levels = push_forward(SPEC, 200_000, 0, seed=3)
    assert np.all(levels < cols)
    c2 = levels[cols == 2]
    assert c2.size > 100 and abs((c2 == 0).mean() - 0.5) < 0.15


def test_srb_invariance_ks():
    n = 10 ** 6
    spec = TowerSpec(3.0, 1000)
    c0, l0 = push_forward(spec, n, 0, seed=1, stream_base=0)
    c1, l1 = push_forward(spec, n, 1, seed=1, stream_base=n)
    key0 = np.sort(c0 * spec.i_max + l0)
    key1 = np.sort(c1 * spec.i_max + l1)
    cells = np.unique(np.concatenate([key0, key1]))
    d = np.abs(np.searchsorted(key0, cells, side="right")
               - np.searchsorted(key1, cells, side="right")).max() / n
    assert d <= math.sqrt(2) * dkw_bound(n, 0.999)


def test_point_api_matches_vector_sampler():
    spec = TowerSpec(3.0, 1000)
    cols, levels = push_forward(spec, 50, 7, seed=4, stream_base=0)
    for i in range(50):
        x = sample_srb(spec, 4, i)
        for _ in range(7):
            x = tower_step(spec, x)
        assert (x.column, x.level) == (cols[i], levels[i])


def test_separation_examples():
    x = _pt(3, 0, (2, 5, 1))
    assert separation(SPEC, x, _pt(4, 0, (2, 5, 1))) == 0
    assert tower_distance(SPEC, x, _pt(4, 0, (2, 5, 1))) == 1.0
    assert separation(SPEC, x, TowerPoint(3, 0, ShiftPoint((2, 5, 7)))) == 3
    assert separation(SPEC, x, x, window=20) >= 20


@settings(max_examples=40)
@given(st.integers(0, 10 ** 6), st.integers(1, 8), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_ball_membership_matches_cylinder(seed, n, s, other):
    spec = TowerSpec(1.5, 50)
    x = sample_srb(spec, seed, 0)
    eps = spec.gamma ** s + 1e-9
    ball = tower_ball(spec, x, eps, n)
    assert ball.s_req == s
    y = sample_srb(spec, other, 1)
    # graft x's cell onto a partly agreeing future
    keep = other % (ball.K + 2)
    fut = x.address.prefix(keep) + y.address.prefix(ball.K + 3)[keep:]
    y = TowerPoint(x.column, x.level, ShiftPoint(fut + (1,) * 70))
    in_cyl = y.address.prefix(ball.K) == ball.word[1:]
    assert tower_ball_contains(spec, x, eps, n, y) == in_cyl


def test_ball_measure_monte_carlo_crosscheck():
    spec = TowerSpec(2.0, 500)
    centre = TowerPoint(1, 0, ShiftPoint((1, 1, 2) + (1,) * 60))
    bs = BowenSpec(centre, 0.3, 3)
    exact = bowen_measure(spec, bs).value
    mc = bowen_measure(spec, bs, MeasureMode.MONTE_CARLO, n_samples=200_000, seed=2)
    assert exact > 0.01
    assert abs(mc.value - exact) <= mc.half_width


def test_tail_law():
    js = [10, 50, 100, 1000, 5000]
    r = tail_law_ratios(SPEC, js)
    assert np.all((r >= 0.5) & (r <= 2.0))
    heavy = TowerSpec(2.0, 10_000)
    jt = [2, 5, 10, 30]
    emp = empirical_tail(heavy, jt, 10 ** 6, seed=1)
    exact = np.array([heavy.tail(j) for j in jt])
    assert np.all(np.abs(emp - exact) <= dkw_bound(10 ** 6, 0.999))
    assert np.all((tail_law_ratios(heavy, jt[1:]) >= 0.5) & (tail_law_ratios(heavy, jt[1:]) <= 2))


def test_whole_space_target():
    x = sample_srb(SPEC, 0, 0)
    s = tower_entry_times(SPEC, BowenSpec(x, 1.5, 3), 100)
    assert np.all(s.times == 1) and s.mu == 1.0
    exp = tower_hitting_experiment(SPEC, BowenSpec(x, 1.5, 3), M=100)
    assert not exp.asserted and exp.curve.values[0] == 1.0


def test_kernel_matches_point_simulation():
    spec = TowerSpec(2.0, 300)
    centre = TowerPoint(1, 0, ShiftPoint((2,) + (1,) * 60))
    ball = tower_ball(spec, centre, 0.3, 2)
    M = 200
    s = tower_entry_times(spec, ball, M, horizon=4000, seed=6)
    got = []
    for i in range(M):
        x = sample_srb(spec, 6, i)
        t = -1
        for k in range(1, 4001):
            x = tower_step(spec, x)
            if (x.column, x.level) == (ball.word[0], ball.level) and \
                    x.address.prefix(ball.K) == ball.word[1:]:
                t = k
                break
        got.append(t)
    got = np.array(got)
    assert np.array_equal(np.sort(got[got > 0]), np.sort(s.times))
    assert int((got < 0).sum()) == s.censored_count


def test_below_threshold_runs_without_assertion():
    spec = TowerSpec(1.5, 2000)
    assert spec.lambda_tail < LAW_THRESHOLD < SPEC.lambda_tail
    x = TowerPoint(2, 0, sample_srb(spec, 1, 0).address)
    exp = tower_hitting_experiment(spec, BowenSpec(x, 0.25, 4), M=2000, seed=1)
    assert not exp.asserted and math.isfinite(exp.ks)


def test_non_principal_mass_small():
    np_mass = non_principal_mass(SPEC, 1e-4, n=10)
    assert np_mass["total"] < 0.01
    assert np_mass["omega_bound"] == pytest.approx(math.sqrt(12) * np_mass["omega_m"])


def test_occupancy_small():
    res = occupancy_chi2(TowerSpec(3.0, 1000), n_samples=200_000, k=20, seed=5)
    assert res["p_value"] > 0.01 and res["cells"] > 5


def test_spec_validation():
    with pytest.raises(ValueError):
        TowerSpec(1.0)
    with pytest.raises(ValueError):
        TowerSpec(2.0, 10, gamma=1.0)
