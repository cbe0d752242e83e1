"""Every acceptance criterion at full size and stated tolerance.

Each test prints one PASS/FAIL line to the terminal (visible without ``-s``).
Criteria 2 and 7 share the 4x4 stability run.
"""

import pytest

from fairsched import acceptance as acc


@pytest.fixture(scope="module")
def stability_sim():
    return acc.stability_run()


@pytest.fixture
def report(pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")

    def emit(res):
        with capman.global_and_fixture_disabled():
            print("\n" + acc.format_line(res), flush=True)
        return res
    return emit


def test_criterion_1a_lqf_overload_rates(report):
    res = report(acc.criterion_1a())
    assert res.passed, res.detail


def test_criterion_1b_mucf_fair_overload_rates(report):
    res = report(acc.criterion_1b())
    assert res.passed, res.detail


def test_criterion_2_rate_stability(report, stability_sim):
    res = report(acc.criterion_2(sim=stability_sim))
    assert res.passed, res.detail


def test_criterion_3_fairness_orderings(report):
    res = report(acc.criterion_3())
    assert res.passed, res.detail


def test_criterion_4_election_postulates(report):
    res = report(acc.criterion_4())
    assert res.passed, res.detail


def test_criterion_5_solver_oracle(report):
    res = report(acc.criterion_5())
    assert res.passed, res.detail


def test_criterion_6_busy_cycle_growth(report):
    res = report(acc.criterion_6())
    assert res.passed, res.detail


def test_criterion_7_lyapunov_drift(report, stability_sim):
    res = report(acc.criterion_7(sim=stability_sim))
    assert res.passed, res.detail


def test_criterion_8_structural_invariants(report):
    res = report(acc.criterion_8())
    assert res.passed, res.detail
