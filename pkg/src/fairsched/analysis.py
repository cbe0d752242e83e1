"""Measurements on completed runs: moments, rate stability, admissibility, Lyapunov
drift and busy-cycle growth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .schedules import ScheduleSet, SwitchSchedules

UNSET = -1


@dataclass
class RunMetrics:
    """Everything a finished run leaves behind.

    ``horizon`` is the number of simulated slots, so cumulative departures are
    ``D_n(horizon - 1)`` and rates are taken over ``horizon`` slots.
    """

    rates: np.ndarray
    horizon: int
    warmup: int
    departures: np.ndarray
    arrivals: np.ndarray
    packets: dict[str, np.ndarray]
    scheduler: str = ""
    load: float | None = None
    probe: dict[str, np.ndarray] | None = None
    theta: list[tuple[int, list[int]]] = field(default_factory=list)

    def latency(self) -> np.ndarray:
        p = self.packets
        keep = (p["real_dep"] != UNSET) & (p["arrival"] >= self.warmup)
        return (p["real_dep"] - p["arrival"])[keep]

    def oq_delay(self) -> np.ndarray:
        p = self.packets
        keep = (p["real_dep"] != UNSET) & (p["shadow_dep"] != UNSET) & (p["arrival"] >= self.warmup)
        return (p["real_dep"] - p["shadow_dep"])[keep]


@dataclass
class AdmissibilityVerdict:
    admissible: bool
    slack: float                      # gamma = 1 - sum(alpha) at the optimum
    load: float                       # sum(alpha) at the optimum
    coefficients: np.ndarray | None = None
    schedules: np.ndarray | None = None

    def witness_ok(self, rates, tol: float = 1e-9) -> bool:
        if self.coefficients is None:
            return False
        cover = self.coefficients @ self.schedules.astype(float)
        return bool(np.all(cover >= np.asarray(rates).ravel() - tol)
                    and self.coefficients.sum() < 1 and np.all(self.coefficients >= 0))


def _complete_to_uniform_lines(mat: np.ndarray, target: float) -> np.ndarray:
    """Raise entries of a matrix with line sums <= target until every row and column
    sums to exactly ``target``."""
    out = mat.copy()
    m = out.shape[0]
    for _ in range(2 * m * m):
        rdef = target - out.sum(axis=1)
        cdef = target - out.sum(axis=0)
        i = int(np.argmax(rdef))
        j = int(np.argmax(cdef))
        if rdef[i] <= 1e-12 or cdef[j] <= 1e-12:
            break
        out[i, j] += min(rdef[i], cdef[j])
    return out


def birkhoff_decomposition(mat: np.ndarray, tol: float = 1e-12):
    """Split a matrix with equal line sums into weighted permutation matrices."""
    rest = np.array(mat, dtype=float)
    m = rest.shape[0]
    coeffs, perms = [], []
    while rest.max() > tol:
        support = (rest > tol).astype(float)
        rows, cols = linear_sum_assignment(support, maximize=True)
        if support[rows, cols].sum() < m:
            break
        a = rest[rows, cols].min()
        rest[rows, cols] -= a
        coeffs.append(a)
        perms.append(SwitchSchedules.permutation_bits(cols))
    return np.array(coeffs), np.array(perms, dtype=bool).reshape(len(perms), m * m)


def check_admissibility(schedules: ScheduleSet, rates, witness: bool = True) -> AdmissibilityVerdict:
    """Is the rate vector strictly inside the convex hull of the schedules?

    Switches use the row/column-sum test. Other sets solve
    ``min sum(alpha) s.t. sum(alpha_i pi_i) >= rates, alpha >= 0`` over the
    enumerated maximal schedules.
    """
    lam = np.asarray(rates, dtype=float).ravel()
    if np.any(lam < 0):
        raise ValueError("rates must be non-negative")
    if isinstance(schedules, SwitchSchedules):
        m = schedules.ports
        mat = lam.reshape(m, m)
        load = float(max(mat.sum(axis=1).max(), mat.sum(axis=0).max()))
        verdict = AdmissibilityVerdict(admissible=load < 1, slack=1 - load, load=load)
        if witness and load < 1:
            if load == 0:
                verdict.coefficients = np.zeros(1)
                verdict.schedules = SwitchSchedules.permutation_bits(range(m))[None, :]
            else:
                alpha, perms = birkhoff_decomposition(_complete_to_uniform_lines(mat, load))
                verdict.coefficients, verdict.schedules = alpha, perms
        return verdict

    table = schedules.enumerate_maximal().astype(float)
    k = len(table)
    res = linprog(np.ones(k), A_ub=-table.T, b_ub=-lam, bounds=[(0, None)] * k, method="highs")
    if res.status != 0:
        return AdmissibilityVerdict(admissible=False, slack=-math.inf, load=math.inf)
    load = float(res.fun)
    alpha = np.clip(res.x, 0, None)
    return AdmissibilityVerdict(admissible=load < 1 - 1e-12, slack=1 - load, load=load,
                                coefficients=alpha, schedules=table.astype(bool))


@dataclass
class StabilityReport:
    rate: np.ndarray              # D_n / tau
    dev_nominal: np.ndarray       # |D_n/tau - lambda_n|
    dev_empirical: np.ndarray     # |D_n/tau - A_n/tau|
    tolerance: float
    flagged: list[int]

    @property
    def max_dev_nominal(self) -> float:
        return float(self.dev_nominal.max(initial=0.0))

    @property
    def max_dev_empirical(self) -> float:
        return float(self.dev_empirical.max(initial=0.0))

    @property
    def stable(self) -> bool:
        return not self.flagged


def rate_stability_report(metrics: RunMetrics, tolerance: float = 0.01) -> StabilityReport:
    tau = metrics.horizon
    rate = metrics.departures / tau
    dev_nom = np.abs(rate - metrics.rates)
    dev_emp = np.abs(rate - metrics.arrivals / tau)
    flagged = np.flatnonzero(dev_nom > tolerance).tolist()
    return StabilityReport(rate, dev_nom, dev_emp, tolerance, flagged)


@dataclass
class Moments:
    count: int
    first: float
    second: float

    @property
    def log_first(self) -> float:
        return math.log(self.first) if self.first > 0 else -math.inf

    @property
    def log_second(self) -> float:
        return math.log(self.second) if self.second > 0 else -math.inf


def moments(x: np.ndarray) -> Moments:
    if len(x) == 0:
        raise ValueError("no samples after warmup")
    xf = x.astype(float)
    n = len(xf)
    return Moments(n, math.fsum(xf) / n, math.fsum(xf * xf) / n)


@dataclass
class MomentReport:
    latency: Moments
    oq_delay: Moments


def moment_report(metrics: RunMetrics) -> MomentReport:
    return MomentReport(moments(metrics.latency()), moments(metrics.oq_delay()))


def lyapunov_sample(tau: int, waits: np.ndarray, urgencies: np.ndarray, rates: np.ndarray, f):
    """``(L, |W|, |Delta|)`` with ``L = sum_n rates_n F(W_n)``."""
    L = float(np.dot(rates, f.antiderivative(waits)))
    return L, int(waits.sum()), float((waits - urgencies).sum())


def lyapunov_probe(state, urgencies, rates, f):
    return lyapunov_sample(state.tau, state.waiting_times(), urgencies.raw, rates, f)


@dataclass
class DriftBin:
    lo: float
    hi: float
    count: int
    mean_drift: float


def drift_by_backlog(L: np.ndarray, W: np.ndarray, quantiles: Sequence[float]) -> list[DriftBin]:
    """Mean one-step drift ``L(t+1) - L(t)`` of slots binned by ``|W(t)|`` quantiles."""
    drift = np.diff(L)
    w = W[:-1]
    edges = np.quantile(w, quantiles)
    bins = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        last = hi == edges[-1]
        sel = (w >= lo) & ((w <= hi) if last else (w < hi))
        if sel.any():
            bins.append(DriftBin(float(lo), float(hi), int(sel.sum()), float(drift[sel].mean())))
    return bins


@dataclass
class BusyCycleFit:
    taus: np.ndarray
    theta: np.ndarray  # checkpoints x outputs (or averaged)
    slope: float
    intercept: float
    r2: float


def log_fit(taus, theta) -> tuple[float, float, float]:
    """Least squares ``theta ~ a log(tau) + b``; returns ``(a, b, R^2)``."""
    x = np.log(np.asarray(taus, dtype=float))
    y = np.asarray(theta, dtype=float)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


def busy_cycle_report(cfn_or_series, output: int | None = None) -> BusyCycleFit:
    """Theta series at the recorded checkpoints and its log-growth fit.

    Accepts a shadow network that was given checkpoints through ``watch`` or a list of
    ``(tau, [theta per output])`` pairs. ``output=None`` averages over outputs.
    """
    series = getattr(cfn_or_series, "theta_series", cfn_or_series)
    taus = np.array([t for t, _ in series], dtype=float)
    th = np.array([v for _, v in series], dtype=float)
    y = th.mean(axis=1) if output is None else th[:, output]
    a, b, r2 = log_fit(taus + 1, y)
    return BusyCycleFit(taus, th, a, b, r2)


def geometric_checkpoints(horizon: int, ratio: float = 1.5, start: int = 1) -> list[int]:
    """Slots ``floor(ratio**k)`` below ``horizon``, deduplicated."""
    out = []
    k = 0
    while True:
        t = int(math.floor(ratio ** k))
        if t >= horizon:
            break
        if t >= start and (not out or t != out[-1]):
            out.append(t)
        k += 1
    return out
