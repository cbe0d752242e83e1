import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from fairsched.election import (IDENTITY, UrgencyVector, WeightFunction, compute_urgencies,
                                eval_antiderivative, eval_weight, gm_rank, gm_scores,
                                schedule_value, urgencies_from)
from fairsched.experiment import Simulation
from fairsched.schedulers import SchedulerSpec
from fairsched.schedules import SwitchSchedules
from fairsched.shadow import ShadowPolicy

votes_st = st.integers(1, 6).flatmap(lambda m: st.integers(2, 6).flatmap(
    lambda c: arrays(np.float64, (m, c), elements=st.integers(-5, 5).map(float))))


def test_score_examples():
    assert gm_scores([[1, 0], [0, 1]]).tolist() == [1, 1]
    assert gm_scores([[3, 1], [2, 5]]).tolist() == [5, 6]
    v = np.array([[3.0, 1.0, 0.0], [2.0, 5.0, 1.0]])
    shifted = v.copy()
    shifted[:, 0] += 10
    assert (gm_scores(shifted) - gm_scores(v)).tolist() == [20, 0, 0]


def test_rank_examples():
    r = gm_rank([[3, 1], [2, 5]])
    assert r.order.tolist() == [1, 0] and not r.tie_broken
    tied = gm_rank([[1, 0], [0, 1]])
    assert tied.order.tolist() == [0, 1] and tied.tie_broken


def test_scores_reject_nonfinite():
    with pytest.raises(ValueError):
        gm_scores([[np.inf, 0]])


@given(votes_st)
def test_pareto(v):
    r = gm_rank(v)
    for c in range(v.shape[1]):
        for c2 in range(v.shape[1]):
            if np.all(v[:, c] >= v[:, c2]) and np.any(v[:, c] > v[:, c2]):
                assert not r.prefers(c2, c)


@given(votes_st, st.randoms())
def test_voter_renaming(v, rnd):
    perm = list(range(v.shape[0]))
    rnd.shuffle(perm)
    assert np.array_equal(gm_rank(v[perm]).order, gm_rank(v).order)


@given(votes_st, st.integers(-100, 100), st.data())
def test_common_shift_keeps_pair_order(v, k, data):
    c, c2 = data.draw(st.lists(st.integers(0, v.shape[1] - 1), min_size=2, max_size=2,
                               unique=True))
    r = gm_rank(v)
    assume(r.scores[c] != r.scores[c2])
    w = v.copy()
    w[:, [c, c2]] += k
    assert gm_rank(w).prefers(c, c2) == r.prefers(c, c2)


def test_urgency_examples():
    u = urgencies_from(10, np.array([7]), np.array([True]))
    assert u.raw.tolist() == [3]
    u = urgencies_from(10, np.array([12]), np.array([True]))
    assert u.raw.tolist() == [-2]
    # queues U = (5, -1, empty)
    u = urgencies_from(10, np.array([5, 11, -1]), np.array([True, True, False]))
    assert u.raw.tolist() == [5, -1, -1]
    u = urgencies_from(10, np.array([5, -1]), np.array([True, False]))
    assert u.raw.tolist() == [5, 0]
    u = urgencies_from(10, np.array([-1, -1]), np.array([False, False]))
    assert u.raw.tolist() == [0, 0]


def test_weight_examples():
    assert eval_weight(IDENTITY, -4) == -4
    assert eval_antiderivative(IDENTITY, -4) == 8
    assert eval_weight(WeightFunction.linear(2.0), 3) == 6


def test_invalid_weights():
    with pytest.raises(ValueError):
        WeightFunction((), (3.0,), rho=2.0)
    with pytest.raises(ValueError):
        WeightFunction((0.0,), (1.0,), rho=2.0)
    with pytest.raises(ValueError):
        WeightFunction((1.0, 0.0), (1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        WeightFunction.linear(-1.0)


PIECEWISE = [
    WeightFunction((0.0,), (0.5, 2.0), rho=2.0),
    WeightFunction((-3.0, 2.0), (1.5, 0.7, 1.2), rho=2.0),
    WeightFunction((1.0, 4.0, 9.0), (1.0, 2.5, 0.4, 1.0), rho=3.0),
]


@pytest.mark.parametrize("f", PIECEWISE)
@given(x=st.floats(-50, 50), y=st.floats(-50, 50))
def test_bi_lipschitz(f, x, y):
    d = abs(f(x) - f(y))
    assert d <= f.rho * abs(x - y) + 1e-9
    assert d >= abs(x - y) / f.rho - 1e-9


@pytest.mark.parametrize("f", PIECEWISE + [IDENTITY, WeightFunction.linear(2.0)])
def test_zero_and_monotone(f):
    assert f(0.0) == 0 and f.antiderivative(0.0) == 0
    xs = np.linspace(-30, 30, 601)
    assert np.all(np.diff(f(xs)) > 0)


@pytest.mark.parametrize("f", PIECEWISE + [WeightFunction.linear(0.75, rho=2.0)])
@given(y=st.floats(-40, 40))
def test_antiderivative_matches_quadrature(f, y):
    pts = [b for b in f.breakpoints if min(0, y) < b < max(0, y)]
    want, _ = quad(lambda x: float(f(x)), 0, y, points=pts or None)
    assert f.antiderivative(y) == pytest.approx(want, abs=1e-7)
    assert f.antiderivative(y) >= 0


def test_schedule_value_examples():
    u = UrgencyVector(np.array([3, -2]), np.array([3.0, -2.0]), np.array([True, True]))
    assert schedule_value(u, [1, 0]) == 3
    assert schedule_value(u, [0, 0]) == 0
    assert schedule_value(u, [1, 1]) == 1
    with pytest.raises(ValueError):
        schedule_value(u, [1, 0, 1])


@pytest.mark.parametrize("policy", [ShadowPolicy.fifo(), ShadowPolicy.round_robin(),
                                    ShadowPolicy.lifo()])
def test_trace_urgency_invariants(policy):
    sim = Simulation(SwitchSchedules(3), np.full(9, 0.3), SchedulerSpec("mucf"),
                     shadow_policy=policy, seed=6)
    for _ in range(1500):
        st_ = sim.state
        urg = compute_urgencies(st_)
        ne = urg.nonempty
        if ne.any() and (~ne).any():
            assert np.all(urg.raw[~ne] <= min(0, urg.raw[ne].min()))
        assert np.all(st_.waiting_times() - urg.raw >= 0)
        sim.step()
