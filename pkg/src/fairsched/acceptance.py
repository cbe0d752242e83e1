"""Canned acceptance experiments.

Each ``criterion_*`` function runs one experiment at full size and returns a
:class:`CriterionResult`. ``run_suite`` runs a selection and ``format_line`` renders
the one-line verdict used by the CLI and the test suite.
"""

from __future__ import annotations

import itertools
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .analysis import (busy_cycle_report, drift_by_backlog, geometric_checkpoints,
                       moment_report, rate_stability_report)
from .core import ArrivalProcess, PacketLog
from .election import gm_rank
from .experiment import Simulation, build_config, run_experiment
from .schedulers import SchedulerSpec, max_weight_assignment, max_weight_exhaustive
from .schedules import ConflictGraphSchedules, ExplicitSchedules, SwitchSchedules
from .shadow import ShadowCFN, ShadowPolicy

# 2x2 switch, queue n = i*M + j: input 0 -> output 1 at 0.6, input 1 -> output 1 at 0.5
OVERLOAD_2X2 = np.array([0.0, 0.6, 0.0, 0.5])


@dataclass
class CriterionResult:
    key: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    values: dict = field(default_factory=dict)


def format_line(r: CriterionResult) -> str:
    return f"[{'PASS' if r.passed else 'FAIL'}] {r.key} {r.name}: {r.detail} ({r.seconds:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def overload_rates(kind: str, shadow: ShadowPolicy | None = None, horizon: int = 10**6,
                   seed: int = 1) -> np.ndarray:
    """Long-run service rates from output 1 to inputs 0 and 1 on the overloaded 2x2."""
    sim = Simulation(SwitchSchedules(2), OVERLOAD_2X2, SchedulerSpec(kind, seed=seed),
                     shadow_policy=shadow, seed=seed).run(horizon)
    return sim.state.departures[[1, 3]] / horizon


@_timed
def criterion_1a(horizon: int = 10**6) -> CriterionResult:
    r = overload_rates("lqf", horizon=horizon)
    ok = abs(r[0] - 0.55) <= 0.02 and abs(r[1] - 0.45) <= 0.02
    return CriterionResult("1a", "overload 2x2 under LQF", ok,
                           f"rates {r[0]:.4f}/{r[1]:.4f}, target 0.55/0.45 +-0.02",
                           values={"rates": r.tolist()})


@_timed
def criterion_1b(horizon: int = 10**6) -> CriterionResult:
    r = overload_rates("mucf", ShadowPolicy.round_robin(), horizon=horizon)
    ok = abs(r[0] - 0.5) <= 0.02 and abs(r[1] - 0.5) <= 0.02
    return CriterionResult("1b", "overload 2x2 under MUCF, round-robin shadow", ok,
                           f"rates {r[0]:.4f}/{r[1]:.4f}, target 0.5/0.5 +-0.02",
                           values={"rates": r.tolist()})


def stability_run(horizon: int = 10**6, seed: int = 1) -> Simulation:
    """4x4 switch at uniform load 0.95 under MUCF(identity), FIFO shadow, drift probe on."""
    rates = np.full(16, 0.95 / 4)
    return Simulation(SwitchSchedules(4), rates, SchedulerSpec("mucf", seed=seed), seed=seed,
                      probe_lyapunov=True, horizon=horizon).run(horizon)


@_timed
def criterion_2(horizon: int = 10**6, sim: Simulation | None = None) -> CriterionResult:
    sim = sim or stability_run(horizon)
    good = rate_stability_report(sim.metrics(), tolerance=0.01)
    over = Simulation(SwitchSchedules(2), OVERLOAD_2X2, SchedulerSpec("mucf", seed=1),
                      seed=1).run(horizon)
    bad = rate_stability_report(over.metrics(), tolerance=0.05)
    ok = good.stable and not bad.stable
    return CriterionResult(
        "2", "rate stability at load 0.95; overload flagged", ok,
        f"admissible max dev {good.max_dev_nominal:.5f} (<=0.01); "
        f"overload max dev {bad.max_dev_nominal:.4f} (>0.05) on queues {bad.flagged}",
        values={"dev": good.max_dev_nominal, "overload_dev": bad.max_dev_nominal})


def _switch_raw(ports: int, rho: float, scheduler: str, horizon: int, warmup: int) -> dict:
    return {"topology": {"kind": "switch", "ports": ports}, "rates": {"uniform": rho},
            "scheduler": {"kind": scheduler}, "horizon": horizon, "warmup": warmup,
            "checkpoints": [], "output_dir": None}


def ordering_table(rho: float, seeds=range(1, 6), ports: int = 8, horizon: int = 500_000,
                   warmup: int = 50_000) -> dict[str, dict[str, float]]:
    """Seed-averaged latency and OQ-delay moments per scheduler."""
    out = {}
    for name in ("mucf", "ocf", "lqf"):
        cfg = build_config(_switch_raw(ports, rho, name, horizon, warmup))
        acc = {"lat1": [], "lat2": [], "oq1": [], "oq2": []}
        for s in seeds:
            m = moment_report(run_experiment(cfg, seed=s, output_dir="").metrics)
            acc["lat1"].append(m.latency.first)
            acc["lat2"].append(m.latency.second)
            acc["oq1"].append(m.oq_delay.first)
            acc["oq2"].append(m.oq_delay.second)
        out[name] = {k: math.fsum(v) / len(v) for k, v in acc.items()}
    return out


@_timed
def criterion_3(seeds=range(1, 6), horizon: int = 500_000, warmup: int = 50_000) -> CriterionResult:
    hi = ordering_table(0.8, seeds, horizon=horizon, warmup=warmup)
    lo = ordering_table(0.3, seeds, horizon=horizon, warmup=warmup)
    m, o, l = hi["mucf"], hi["ocf"], hi["lqf"]
    order_ok = m["lat2"] < o["lat2"] < l["lat2"]
    oq_ok = all(m[k] <= o[k] and m[k] <= l[k] for k in ("oq1", "oq2"))
    firsts = [lo[s]["lat1"] for s in lo]
    spread = max(firsts) / min(firsts) - 1
    ok = order_ok and oq_ok and spread <= 0.10
    detail = (f"rho=0.8 latency m2 mucf {m['lat2']:.2f} < ocf {o['lat2']:.2f} < lqf {l['lat2']:.2f}; "
              f"oq m1 {m['oq1']:.3f}/{o['oq1']:.3f}/{l['oq1']:.3f}, "
              f"oq m2 {m['oq2']:.2f}/{o['oq2']:.2f}/{l['oq2']:.2f}; "
              f"rho=0.3 latency m1 spread {spread:.2%}")
    return CriterionResult("3", "fairness orderings at M=8", ok, detail,
                           values={"0.8": hi, "0.3": lo})


def check_pareto(votes: np.ndarray, ranking) -> bool:
    n_cand = votes.shape[1]
    for c, c2 in itertools.permutations(range(n_cand), 2):
        if np.all(votes[:, c] >= votes[:, c2]) and np.any(votes[:, c] > votes[:, c2]):
            if ranking.prefers(c2, c):
                return False
    return True


def check_anonymity(votes: np.ndarray, ranking, rng) -> bool:
    other = gm_rank(votes[rng.permutation(votes.shape[0])])
    return np.array_equal(other.order, ranking.order)


def check_shift(votes: np.ndarray, ranking, rng) -> bool:
    n_cand = votes.shape[1]
    if n_cand < 2:
        return True
    c, c2 = rng.choice(n_cand, size=2, replace=False)
    if ranking.scores[c] == ranking.scores[c2]:
        return True  # tied pairs are ordered by index, not by the postulate
    shifted = votes.copy()
    shifted[:, [c, c2]] += float(rng.integers(-50, 51))
    return gm_rank(shifted).prefers(c, c2) == ranking.prefers(c, c2)


def p1_consistent_rankings(votes: np.ndarray) -> list[tuple[int, ...]]:
    """Every strict ranking of one profile that no Pareto comparison rules out.

    Anonymity and shift invariance relate different profiles, so on a single profile
    with fixed candidates they add no constraint that Pareto has not already imposed.
    """
    n_cand = votes.shape[1]
    dominated = [(c, c2) for c, c2 in itertools.permutations(range(n_cand), 2)
                 if np.all(votes[:, c] >= votes[:, c2]) and np.any(votes[:, c] > votes[:, c2])]
    out = []
    for order in itertools.permutations(range(n_cand)):
        pos = {c: k for k, c in enumerate(order)}
        if all(pos[c] < pos[c2] for c, c2 in dominated):
            out.append(order)
    return out


@_timed
def criterion_4(n_random: int = 10_000, seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    fails = {"P1": 0, "P2": 0, "P3": 0}
    for _ in range(n_random):
        v = rng.normal(size=(rng.integers(1, 7), rng.integers(2, 7)))
        if rng.random() < 0.3:
            v = np.round(v)  # integer ties make Pareto comparisons common
        r = gm_rank(v)
        fails["P1"] += not check_pareto(v, r)
        fails["P2"] += not check_anonymity(v, r, rng)
        fails["P3"] += not check_shift(v, r, rng)
    props_ok = not any(fails.values())

    checked = unique = agree = 0
    example = None
    for n_vot in range(1, 4):
        for n_cand in range(2, 4):
            for flat in itertools.product(range(4), repeat=n_vot * n_cand):
                v = np.array(flat, dtype=float).reshape(n_vot, n_cand)
                r = gm_rank(v)
                if r.tie_broken:
                    continue
                checked += 1
                admissible = p1_consistent_rankings(v)
                unique += len(admissible) == 1
                if len(admissible) == 1 and admissible[0] == tuple(r.order):
                    agree += 1
                elif example is None:
                    example = (v.astype(int).tolist(), len(admissible))
    unique_ok = agree == checked
    ok = props_ok and unique_ok
    detail = (f"{n_random} random profiles, failures {fails}; "
              f"brute force: gm is the unique P1-P3 ranking on {agree}/{checked} profiles")
    if example is not None:
        detail += f" (e.g. votes {example[0]} admit {example[1]} rankings)"
    return CriterionResult("4", "ranked election postulates", ok, detail,
                           values={"fails": fails, "checked": checked, "unique": unique,
                                   "agree": agree})


@_timed
def criterion_5(n_matrices: int = 1000, seed: int = 11) -> CriterionResult:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for m in range(2, 6):
        sched = SwitchSchedules(m)
        for k in range(n_matrices):
            if k % 2:
                w = rng.integers(-20, 21, size=m * m).astype(float)
            else:
                w = rng.normal(size=m * m)
            a = max_weight_assignment(m, w)
            b = max_weight_exhaustive(sched, w)
            mismatches += float(w @ a) != float(w @ b)
    return CriterionResult("5", "assignment solver vs enumeration", mismatches == 0,
                           f"{mismatches} value mismatches over {4 * n_matrices} matrices, M=2..5")


def shadow_theta(rate: float, horizon: int, seed: int, sources: int = 8) -> list[tuple[int, list[int]]]:
    """Theta series of a single shadow output fed by ``sources`` Bernoulli inputs."""
    log = PacketLog()
    cfn = ShadowCFN(np.zeros(sources, dtype=np.int64), ShadowPolicy.fifo(), log)
    cfn.watch(geometric_checkpoints(horizon))
    arr = ArrivalProcess(np.full(sources, rate / sources), seed=seed)
    zeros = [0] * sources
    for tau in range(horizon):
        cfn.serve(tau)
        src = np.flatnonzero(arr.sample(tau)).tolist()
        if src:
            cfn.ingest(log.extend(tau, src, zeros[:len(src)]), tau)
    return cfn.theta_series


@_timed
def criterion_6(seeds=range(1, 11), horizon: int = 10**6) -> CriterionResult:
    series = [shadow_theta(0.9, horizon, s) for s in seeds]
    taus = np.array([t for t, _ in series[0]], dtype=float)
    theta = np.mean([[v[0] for _, v in s] for s in series], axis=0)
    fit = busy_cycle_report(list(zip(taus.astype(int), theta[:, None].tolist())))
    tail = taus >= 10**4
    ratio = theta[tail] / (taus[tail] + 1)
    decreasing = bool(np.all(np.diff(ratio) < 0))
    over = [shadow_theta(1.1, horizon, s) for s in list(seeds)[:3]]
    over_ratio = min(min(v[0] / (t + 1) for t, v in s if t >= 10**4) for s in over)
    ok = decreasing and fit.r2 >= 0.8 and over_ratio >= 0.5
    detail = (f"rate 0.9: theta/tau decreasing past 1e4 = {decreasing}, "
              f"theta ~ {fit.slope:.2f} log tau + {fit.intercept:.2f}, R^2 {fit.r2:.3f}; "
              f"rate 1.1: min theta/tau past 1e4 = {over_ratio:.3f}")
    return CriterionResult("6", "busy-cycle logarithmic growth", ok, detail,
                           values={"r2": fit.r2, "over_ratio": over_ratio})


DRIFT_QUANTILES = (0.9, 0.925, 0.95, 0.975, 1.0)


@_timed
def criterion_7(horizon: int = 10**6, sim: Simulation | None = None) -> CriterionResult:
    sim = sim or stability_run(horizon)
    s = sim.probe_series()
    bins = drift_by_backlog(s["L"], s["W"], DRIFT_QUANTILES)
    ok = bool(bins) and all(b.mean_drift < 0 for b in bins)
    parts = ", ".join(f"|W| in [{b.lo:.0f},{b.hi:.0f}]: {b.mean_drift:+.2f} (n={b.count})"
                      for b in bins)
    return CriterionResult("7", "negative Lyapunov drift at large backlog", ok, parts,
                           values={"bins": [(b.lo, b.hi, b.count, b.mean_drift) for b in bins]})


def debug_topologies() -> list[tuple[str, dict]]:
    ring = [[k, (k + 1) % 5] for k in range(5)]
    explicit = [[1, 0, 1, 0], [0, 1, 0, 1], [1, 1, 0, 0]]
    return [
        ("switch", {"topology": {"kind": "switch", "ports": 4}, "rates": {"uniform": 0.9}}),
        ("conflict_graph", {"topology": {"kind": "conflict_graph", "n_links": 5, "edges": ring,
                                         "dest": [0, 0, 1, 1, 2]},
                            "rates": {"uniform": 0.9}}),
        ("explicit", {"topology": {"kind": "explicit", "n_queues": 4, "schedules": explicit,
                                   "dest": [0, 1, 0, 1]},
                      "rates": {"uniform": 0.85}}),
    ]


@_timed
def criterion_8(horizon: int = 10_000) -> CriterionResult:
    problems = []
    runs = 0
    for name, topo in debug_topologies():
        for sched in ("mucf", "lqf", "ocf", "random_maximal"):
            raw = dict(topo, scheduler={"kind": sched}, horizon=horizon, warmup=0,
                       seed=3, debug=True, probe_lyapunov=True)
            try:
                with tempfile.TemporaryDirectory() as d1, tempfile.TemporaryDirectory() as d2:
                    a = run_experiment(build_config(raw), output_dir=d1)
                    b = run_experiment(build_config(raw), output_dir=d2)
                    for key in a.files:
                        if Path(a.files[key]).read_bytes() != Path(b.files[key]).read_bytes():
                            problems.append(f"{name}/{sched}: {key}.csv differs between runs")
            except AssertionError as e:
                problems.append(f"{name}/{sched}: {e}")
            runs += 1
    ok = not problems
    detail = f"{runs} debug runs of {horizon} slots, repeated for byte identity"
    if problems:
        detail += "; " + "; ".join(problems[:3])
    return CriterionResult("8", "structural invariants on every topology", ok, detail)


CRITERIA: dict[str, Callable[[], CriterionResult]] = {
    "1a": criterion_1a, "1b": criterion_1b, "2": criterion_2, "3": criterion_3,
    "4": criterion_4, "5": criterion_5, "6": criterion_6, "7": criterion_7, "8": criterion_8,
}


def run_suite(keys=None, report: Callable[[str], None] | None = None) -> list[CriterionResult]:
    """Run the selected criteria (all by default); 2 and 7 share one simulation."""
    keys = list(keys or CRITERIA)
    unknown = [k for k in keys if k not in CRITERIA]
    if unknown:
        raise KeyError(f"unknown criteria {unknown}")
    shared = stability_run() if {"2", "7"} <= set(keys) else None
    results = []
    for k in keys:
        fn = CRITERIA[k]
        res = fn(sim=shared) if k in ("2", "7") and shared is not None else fn()
        results.append(res)
        if report:
            report(format_line(res))
    return results
