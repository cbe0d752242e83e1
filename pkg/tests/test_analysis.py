import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fairsched.analysis import (birkhoff_decomposition, busy_cycle_report,
                                check_admissibility, drift_by_backlog, geometric_checkpoints,
                                log_fit, lyapunov_sample, moment_report, moments,
                                rate_stability_report)
from fairsched.core import UNSET
from fairsched.election import IDENTITY, WeightFunction
from fairsched.experiment import Simulation
from fairsched.schedulers import SchedulerSpec
from fairsched.schedules import ConflictGraphSchedules, ExplicitSchedules, SwitchSchedules

OVERLOAD = np.array([0.0, 0.6, 0.0, 0.5])


def test_overload_is_inadmissible():
    v = check_admissibility(SwitchSchedules(2), OVERLOAD)
    assert not v.admissible and v.load == pytest.approx(1.1)


def test_zero_rates_admissible():
    v = check_admissibility(SwitchSchedules(3), np.zeros(9))
    assert v.admissible and v.slack == 1
    assert v.witness_ok(np.zeros(9))


@pytest.mark.parametrize("m,rho", [(2, 0.5), (3, 0.99), (4, 1.0), (4, 0.3)])
def test_uniform_switch(m, rho):
    v = check_admissibility(SwitchSchedules(m), np.full(m * m, rho / m))
    assert v.admissible == (rho < 1)
    assert v.slack == pytest.approx(1 - rho)


@given(st.integers(2, 5), st.data())
def test_switch_witness(m, data):
    lam = data.draw(arrays(np.float64, m * m, elements=st.floats(0, 1)))
    lam = lam / max(1.0, lam.reshape(m, m).sum(0).max(), lam.reshape(m, m).sum(1).max()) * 0.97
    v = check_admissibility(SwitchSchedules(m), lam)
    assert v.admissible
    assert v.witness_ok(lam)
    # LP route agrees with the row/column test on the same rates
    lp = check_admissibility(ExplicitSchedules(m * m, SwitchSchedules(m).enumerate_maximal()), lam)
    assert lp.load == pytest.approx(v.load, abs=1e-7)


def test_birkhoff_reconstructs():
    mat = np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]])
    a, perms = birkhoff_decomposition(mat)
    assert a.sum() == pytest.approx(1.0)
    assert np.allclose((a @ perms).reshape(3, 3), mat)


def test_conflict_graph_lp():
    tri = ConflictGraphSchedules(3, [(0, 1), (1, 2), (0, 2)])
    ok = check_admissibility(tri, [0.3, 0.3, 0.3])
    assert ok.admissible and ok.load == pytest.approx(0.9) and ok.witness_ok([0.3] * 3)
    assert not check_admissibility(tri, [0.34, 0.33, 0.34]).admissible


def test_negative_rates_rejected():
    with pytest.raises(ValueError):
        check_admissibility(SwitchSchedules(2), [-0.1, 0, 0, 0])


def _toy_metrics(horizon=4000, rate=0.5, warmup=0):
    sched = ConflictGraphSchedules(1, [])
    sim = Simulation(sched, [rate], SchedulerSpec("lqf"), seed=1).run(horizon)
    return sim, sim.metrics(warmup)


def test_always_served_queue_has_unit_latency():
    _, m = _toy_metrics()
    rep = moment_report(m)
    assert rep.latency.first == 1 and rep.latency.second == 1
    assert rep.latency.log_first == 0


def test_empty_run_raises():
    _, m = _toy_metrics(rate=0.0)
    with pytest.raises(ValueError):
        moment_report(m)


def test_moments_against_direct_sums():
    x = np.array([1, 2, 2, 5, 9])
    mo = moments(x)
    assert (mo.count, mo.first, mo.second) == (5, 19 / 5, 115 / 5)
    assert mo.log_second == pytest.approx(math.log(23))


def test_zero_rate_queue_reports_zero():
    sim = Simulation(SwitchSchedules(2), [0.3, 0.0, 0.0, 0.3], SchedulerSpec("mucf"), seed=2)
    rep = rate_stability_report(sim.run(5000).metrics())
    assert rep.rate[1] == 0 and rep.rate[2] == 0
    assert rep.max_dev_empirical < 0.005


def test_overload_flagged():
    sim = Simulation(SwitchSchedules(2), OVERLOAD, SchedulerSpec("mucf"), seed=2).run(50_000)
    rep = rate_stability_report(sim.metrics(), tolerance=0.03)
    assert not rep.stable and 1 in rep.flagged
    assert rep.max_dev_nominal > 0.03


def test_departures_bounded_by_arrivals_at_checkpoints():
    sim = Simulation(SwitchSchedules(3), np.full(9, 0.3), SchedulerSpec("ocf"), seed=5)
    for t in (10, 100, 1000, 3000):
        sim.run(t)
        assert np.all(sim.state.departures / t <= sim.state.arrivals_total / t + 1 / t)


def test_oq_delay_on_switch_is_service_minus_shadow():
    sim = Simulation(SwitchSchedules(3), np.full(9, 0.3), SchedulerSpec("mucf"), seed=5)
    served_at = {}
    for _ in range(2000):
        ev = sim.step()
        for pid in ev.departed:
            served_at[pid] = ev.tau
    cols = sim.log.columns()
    for pid, t in served_at.items():
        assert cols["real_dep"][pid] == t
    m = sim.metrics()
    done = cols["real_dep"] != UNSET
    assert np.array_equal(m.oq_delay(), (cols["real_dep"] - cols["shadow_dep"])[done])


def test_warmup_only_filters():
    _, m0 = _toy_metrics(rate=0.4, warmup=0)
    _, m1 = _toy_metrics(rate=0.4, warmup=1000)
    assert all(np.array_equal(m0.packets[k], m1.packets[k]) for k in m0.packets)
    p = m0.packets
    late = (p["arrival"] >= 1000) & (p["real_dep"] != UNSET)
    assert len(m1.latency()) == int(late.sum()) < len(m0.latency())


def test_lyapunov_empty_is_zero():
    L, W, D = lyapunov_sample(0, np.zeros(4, dtype=int), np.zeros(4, dtype=int), np.full(4, 0.2),
                              IDENTITY)
    assert (L, W, D) == (0.0, 0, 0.0)


@given(arrays(np.int64, 6, elements=st.integers(0, 500)),
       arrays(np.float64, 6, elements=st.floats(0, 1)))
def test_lyapunov_non_negative(w, lam):
    f = WeightFunction((0.0,), (0.5, 2.0), rho=2.0)
    L, W, _ = lyapunov_sample(0, w, w, lam, f)
    assert L >= 0 and W == w.sum()


def test_lyapunov_matches_identity_formula():
    w = np.array([3, 0, 5])
    lam = np.array([0.2, 0.1, 0.4])
    L, _, D = lyapunov_sample(0, w, np.array([1, -2, 5]), lam, IDENTITY)
    assert L == pytest.approx(0.2 * 4.5 + 0.4 * 12.5)
    assert D == 4


def test_drift_bins():
    L = np.array([0, 5, 3, 8, 2, 1, 0], dtype=float)
    W = np.array([1, 2, 3, 4, 5, 6, 7])
    bins = drift_by_backlog(L, W, [0.0, 0.5, 1.0])
    assert sum(b.count for b in bins) == 6
    assert bins[0].mean_drift == pytest.approx(np.mean([5, -2, 5]))
    assert bins[1].mean_drift == pytest.approx(np.mean([-6, -1, -1]))


def test_log_fit_exact():
    taus = np.array([10, 100, 1000, 10000])
    a, b, r2 = log_fit(taus, 2 * np.log(taus) + 1)
    assert a == pytest.approx(2) and b == pytest.approx(1) and r2 == pytest.approx(1)


def test_busy_cycle_report_from_series():
    series = [(t, [int(3 * math.log(t + 1)), 0]) for t in geometric_checkpoints(10**5)]
    fit = busy_cycle_report(series, output=0)
    assert fit.slope == pytest.approx(3, abs=0.2) and fit.r2 > 0.99


def test_geometric_checkpoints():
    cps = geometric_checkpoints(100)
    assert cps[:6] == [1, 2, 3, 5, 7, 11]
    assert cps == sorted(set(cps)) and cps[-1] < 100


def test_busy_cycle_growth_is_sublinear():
    from fairsched.acceptance import shadow_theta
    series = shadow_theta(0.9, 10**5, seed=3)
    fit = busy_cycle_report(series)
    assert fit.slope > 0
    taus = np.array([t for t, _ in series])
    theta = np.array([v[0] for _, v in series])
    assert theta[-1] / taus[-1] < 0.01
    over = shadow_theta(1.1, 10**5, seed=3)
    assert over[-1][1][0] / over[-1][0] > 0.5
