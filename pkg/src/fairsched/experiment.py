"""Seeded experiment runs: JSON config -> lockstep simulation -> metrics and CSV tables.

Config schema (JSON object; unknown keys are rejected)::

    topology       {"kind": "switch", "ports": M}
                   {"kind": "conflict_graph", "n_links": N, "edges": [[u, v], ...], "dest": [...]}
                   {"kind": "explicit", "n_queues": N, "schedules": [[0/1]*N, ...], "dest": [...]}
    rates          {"uniform": rho} | {"matrix": [[...]]} (switch) | {"vector": [...]}
    scheduler      {"kind": "mucf"|"lqf"|"ocf"|"random_maximal", "tie_break": "lex"|"random"}
    weight         {"kind": "identity"} | {"kind": "linear", "slope": a, "rho": r}
                   | {"kind": "piecewise_linear", "breakpoints": [...], "slopes": [...], "rho": r}
    shadow_policy  {"kind": "fifo"|"lifo"|"round_robin"} | {"kind": "strict_priority", "classes": [...]}
    output_policy  "fifo" | "shadow_order" | "strict_priority"   (default: shadow_order for mucf)
    horizon, warmup, seed                       integers, horizon > warmup >= 0
    checkpoints    "geometric" | [slot, ...]
    output_dir     directory for CSV tables, or null
    write_packets  bool (default true); probe_lyapunov, debug  bool (default false)

``uniform`` load on a switch means ``lambda_ij = rho / M``. On other topologies it
means the all-equal rate vector scaled so that ``rho = 1`` sits on the capacity
boundary.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .analysis import (RunMetrics, check_admissibility, geometric_checkpoints,
                       lyapunov_sample, moment_report, rate_stability_report)
from .core import (ArrivalProcess, InvariantError, NetworkState, OutputPolicy, PacketLog,
                   advance_slot)
from .election import IDENTITY, WeightFunction, compute_urgencies
from .schedulers import SchedulerKind, SchedulerSpec, TieBreak, select_schedule
from .schedules import (ConflictGraphSchedules, ExplicitSchedules, ScheduleSet,
                        SwitchSchedules)
from .shadow import PolicyKind, ShadowCFN, ShadowPolicy

log = logging.getLogger(__name__)

PACKET_COLUMNS = ["id", "n", "m", "arrival", "shadow_dep", "real_dep"]
SERIES_COLUMNS = ["tau", "L", "W_total", "Delta_total"]
SUMMARY_COLUMNS = [
    "scheduler", "rho", "seed", "horizon", "warmup",
    "latency_count", "latency_m1", "latency_m2", "log_latency_m1", "log_latency_m2",
    "oq_count", "oq_m1", "oq_m2", "log_oq_m1", "log_oq_m2",
    "max_dev_nominal", "max_dev_empirical", "admissible",
]
_KEYS = {"topology", "rates", "scheduler", "weight", "shadow_policy", "output_policy",
         "horizon", "warmup", "seed", "checkpoints", "output_dir", "write_packets",
         "probe_lyapunov", "debug"}


class ConfigError(ValueError):
    pass


class Simulation:
    """One lockstep run of the real network and its shadow.

    Per slot: urgencies -> schedule -> service in both networks -> arrivals into both.
    ``debug`` asserts the structural invariants every slot.
    """

    def __init__(self, schedules: ScheduleSet, rates, spec: SchedulerSpec, *,
                 dest: Sequence[int] | None = None, shadow_policy: ShadowPolicy | None = None,
                 output_policy: OutputPolicy | None = None, seed: int = 0,
                 debug: bool = False, probe_lyapunov: bool = False,
                 checkpoints: Sequence[int] = (), horizon: int | None = None):
        self.schedules = schedules
        self.rates = np.asarray(rates, dtype=float).ravel()
        if self.rates.shape != (schedules.n_queues,):
            raise ValueError(f"expected {schedules.n_queues} rates, got {self.rates.size}")
        if dest is None:
            if isinstance(schedules, SwitchSchedules):
                dest = schedules.topology.dest()
            else:
                dest = np.arange(schedules.n_queues)
        if output_policy is None:
            output_policy = (OutputPolicy.SHADOW_DEPARTURE_ORDER
                             if spec.kind is SchedulerKind.MUCF else OutputPolicy.FIFO)
        self.spec = spec
        self.debug = debug
        self.log = PacketLog()
        self.shadow = ShadowCFN(dest, shadow_policy or ShadowPolicy.fifo(), self.log,
                                debug=debug)
        if checkpoints:
            self.shadow.watch(checkpoints)
        priority = None
        if OutputPolicy(output_policy) is OutputPolicy.STRICT_PRIORITY:
            if self.shadow.policy.classes is None:
                raise ValueError("strict-priority output queues need shadow priority classes")
            priority = self.shadow.policy.classes
        self.state = NetworkState(schedules, self.shadow, dest, output_policy=output_policy,
                                  priority=priority, log=self.log, debug=debug)
        self.arrivals = ArrivalProcess(self.rates, seed=seed)
        self.seed = seed
        self.f = spec.weight if spec.kind is SchedulerKind.MUCF else IDENTITY
        self.probe = probe_lyapunov
        self._series: dict[str, list] = {"tau": [], "L": [], "W": [], "Delta": []}
        self._probe_arrays = None
        if probe_lyapunov and horizon:
            self._probe_arrays = (np.zeros(horizon), np.zeros(horizon, dtype=np.int64),
                                  np.zeros(horizon))

    @property
    def tau(self) -> int:
        return self.state.tau

    def step(self):
        st = self.state
        tau = st.tau
        urg = None
        if self.spec.kind is SchedulerKind.MUCF or self.debug or self.probe:
            urg = compute_urgencies(st, self.f)
        if self.debug:
            self._check_urgencies(urg)
        if self.probe:
            L, W, D = lyapunov_sample(tau, st.waiting_times(), urg.raw, self.rates, self.f)
            arrs = self._probe_arrays
            if arrs is not None and tau < len(arrs[0]):
                arrs[0][tau], arrs[1][tau], arrs[2][tau] = L, W, D
            else:
                s = self._series
                s["tau"].append(tau); s["L"].append(L); s["W"].append(W); s["Delta"].append(D)
        bits = select_schedule(self.spec, st, urgencies=urg, verify=self.debug)
        if self.debug and not self.schedules.is_maximal(bits):
            raise InvariantError(f"slot {tau}: selected schedule is not maximal")
        return advance_slot(st, bits, self.arrivals.sample(tau), trusted=True)

    def run(self, horizon: int) -> "Simulation":
        while self.state.tau < horizon:
            self.step()
        return self

    def _check_urgencies(self, urg):
        raw = urg.raw
        ne = urg.nonempty
        if (~ne).any():
            cap = min(0, int(raw[ne].min())) if ne.any() else 0
            if np.any(raw[~ne] > cap):
                raise InvariantError(f"slot {self.tau}: empty-queue urgency above {cap}")
        if np.any(self.state.waiting_times() - raw < 0):
            raise InvariantError(f"slot {self.tau}: negative W - U")

    def probe_series(self) -> dict[str, np.ndarray]:
        if self._probe_arrays is not None:
            n = min(self.tau, len(self._probe_arrays[0]))
            L, W, D = (a[:n] for a in self._probe_arrays)
            return {"tau": np.arange(n), "L": L, "W": W, "Delta": D}
        s = self._series
        return {"tau": np.array(s["tau"], dtype=np.int64), "L": np.array(s["L"]),
                "W": np.array(s["W"], dtype=np.int64), "Delta": np.array(s["Delta"])}

    def metrics(self, warmup: int = 0, load: float | None = None) -> RunMetrics:
        st = self.state
        return RunMetrics(
            rates=self.rates, horizon=st.tau, warmup=warmup,
            departures=st.departures.copy(), arrivals=st.arrivals_total.copy(),
            packets=self.log.columns(), scheduler=self.spec.label, load=load,
            probe=self.probe_series() if self.probe else None,
            theta=list(self.shadow.theta_series))


@dataclass
class ExperimentConfig:
    schedules: ScheduleSet
    dest: np.ndarray
    rates: np.ndarray
    load: float | None
    scheduler: SchedulerSpec
    weight: WeightFunction
    shadow_policy: ShadowPolicy
    output_policy: OutputPolicy | None
    horizon: int
    warmup: int
    seed: int
    checkpoints: list[int]
    output_dir: str | None
    write_packets: bool = True
    probe_lyapunov: bool = False
    debug: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        for key, value in changes.items():
            if key == "load":
                raw["rates"] = {"uniform": value}
            elif key == "scheduler":
                raw.setdefault("scheduler", {})["kind"] = value
            else:
                raw[key] = value
        return build_config(raw)


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"{where}.{key}: required field missing")
    return obj[key]


def _int(value, where: str, low: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if low is not None and value < low:
        raise ConfigError(f"{where}: must be >= {low}")
    return value


def _topology(t: dict) -> tuple[ScheduleSet, np.ndarray]:
    if not isinstance(t, dict):
        raise ConfigError("topology: expected an object")
    kind = _need(t, "kind", "topology")
    if kind == "switch":
        ports = _int(_need(t, "ports", "topology"), "topology.ports", 1)
        s = SwitchSchedules(ports)
        return s, s.topology.dest()
    if kind == "conflict_graph":
        n = _int(_need(t, "n_links", "topology"), "topology.n_links", 1)
        try:
            s = ConflictGraphSchedules(n, _need(t, "edges", "topology"))
        except (ValueError, TypeError) as e:
            raise ConfigError(f"topology.edges: {e}") from None
    elif kind == "explicit":
        n = _int(_need(t, "n_queues", "topology"), "topology.n_queues", 1)
        try:
            s = ExplicitSchedules(n, _need(t, "schedules", "topology"))
        except (ValueError, TypeError) as e:
            raise ConfigError(f"topology.schedules: {e}") from None
        report = s.validate()
        if not report.covering:
            raise ConfigError(f"topology.schedules: queues {report.uncovered} are never served")
    else:
        raise ConfigError(f"topology.kind: unknown kind {kind!r}")
    dest = np.asarray(t.get("dest", list(range(s.n_queues))), dtype=np.int64)
    if dest.shape != (s.n_queues,) or np.any(dest < 0):
        raise ConfigError(f"topology.dest: need {s.n_queues} non-negative output indices")
    return s, dest


def _rates(r: dict, schedules: ScheduleSet) -> tuple[np.ndarray, float | None]:
    if not isinstance(r, dict) or len(r) != 1:
        raise ConfigError("rates: expected exactly one of uniform / matrix / vector")
    (kind, value), = r.items()
    n = schedules.n_queues
    if kind == "uniform":
        rho = float(value)
        if not 0 <= rho <= 1:
            raise ConfigError(f"rates.uniform: load {rho} outside [0, 1]")
        if isinstance(schedules, SwitchSchedules):
            return np.full(n, rho / schedules.ports), rho
        cap = check_admissibility(schedules, np.ones(n), witness=False).load
        return np.full(n, rho / cap), rho
    if kind == "matrix":
        if not isinstance(schedules, SwitchSchedules):
            raise ConfigError("rates.matrix: only valid for switch topologies")
        lam = np.asarray(value, dtype=float)
        if lam.shape != (schedules.ports, schedules.ports):
            raise ConfigError(f"rates.matrix: expected {schedules.ports}x{schedules.ports}")
        lam = lam.ravel()
    elif kind == "vector":
        lam = np.asarray(value, dtype=float).ravel()
        if lam.shape != (n,):
            raise ConfigError(f"rates.vector: expected {n} entries")
    else:
        raise ConfigError(f"rates: unknown form {kind!r}")
    if np.any(lam < 0) or np.any(lam > 1):
        raise ConfigError("rates: every rate must lie in [0, 1]")
    return lam, None


def parse_weight(w: dict | None) -> WeightFunction:
    w = w or {"kind": "identity"}
    kind = w.get("kind", "identity")
    try:
        if kind == "identity":
            return WeightFunction.identity()
        if kind == "linear":
            return WeightFunction.linear(float(_need(w, "slope", "weight")), w.get("rho"))
        if kind == "piecewise_linear":
            return WeightFunction(w.get("breakpoints", []), _need(w, "slopes", "weight"),
                                  rho=float(w.get("rho", 2.0)))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"weight: {e}") from None
    raise ConfigError(f"weight.kind: unknown kind {kind!r}")


def _shadow_policy(p: dict | None, n: int) -> ShadowPolicy:
    p = p or {"kind": "fifo"}
    try:
        kind = PolicyKind(p.get("kind", "fifo"))
    except ValueError:
        raise ConfigError(f"shadow_policy.kind: unknown kind {p.get('kind')!r}") from None
    if kind is PolicyKind.STRICT_PRIORITY:
        classes = _need(p, "classes", "shadow_policy")
        if len(classes) != n or any(not isinstance(c, int) or c < 0 for c in classes):
            raise ConfigError(f"shadow_policy.classes: need {n} non-negative integers")
        return ShadowPolicy.strict_priority(classes)
    return ShadowPolicy(kind)


def build_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigError(f"config: unknown fields {sorted(unknown)}")
    schedules, dest = _topology(_need(raw, "topology", "config"))
    rates, load = _rates(_need(raw, "rates", "config"), schedules)
    weight = parse_weight(raw.get("weight"))
    sch = raw.get("scheduler", {"kind": "mucf"})
    seed = _int(raw.get("seed", 0), "seed", 0)
    try:
        spec = SchedulerSpec(SchedulerKind(sch.get("kind", "mucf")), weight,
                             TieBreak(sch.get("tie_break", "lex")), seed=seed)
    except ValueError as e:
        raise ConfigError(f"scheduler: {e}") from None
    policy = _shadow_policy(raw.get("shadow_policy"), schedules.n_queues)
    out_pol = raw.get("output_policy")
    if out_pol is not None:
        try:
            out_pol = OutputPolicy(out_pol)
        except ValueError:
            raise ConfigError(f"output_policy: unknown policy {out_pol!r}") from None
    horizon = _int(_need(raw, "horizon", "config"), "horizon", 1)
    warmup = _int(raw.get("warmup", 0), "warmup", 0)
    if warmup >= horizon:
        raise ConfigError("warmup: must be smaller than horizon")
    cps = raw.get("checkpoints", "geometric")
    if cps == "geometric":
        checkpoints = geometric_checkpoints(horizon)
    elif isinstance(cps, list) and all(isinstance(c, int) and 0 <= c < horizon for c in cps):
        checkpoints = sorted(set(cps))
    else:
        raise ConfigError("checkpoints: 'geometric' or a list of slots below horizon")
    return ExperimentConfig(
        schedules=schedules, dest=dest, rates=rates, load=load, scheduler=spec,
        weight=weight, shadow_policy=policy, output_policy=out_pol, horizon=horizon,
        warmup=warmup, seed=seed, checkpoints=checkpoints, output_dir=raw.get("output_dir"),
        write_packets=bool(raw.get("write_packets", True)),
        probe_lyapunov=bool(raw.get("probe_lyapunov", False)),
        debug=bool(raw.get("debug", False)), raw=copy.deepcopy(raw))


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config; inadmissible loads are allowed with a warning."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: invalid JSON ({e})") from None
    cfg = build_config(raw)
    verdict = check_admissibility(cfg.schedules, cfg.rates, witness=False)
    if not verdict.admissible:
        log.warning("rates are not strictly admissible (load %.4g); running anyway", verdict.load)
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def simulate(cfg: ExperimentConfig, seed: int | None = None) -> Simulation:
    seed = cfg.seed if seed is None else seed
    spec = SchedulerSpec(cfg.scheduler.kind, cfg.weight, cfg.scheduler.tie_break, seed=seed)
    sim = Simulation(cfg.schedules, cfg.rates, spec, dest=cfg.dest,
                     shadow_policy=cfg.shadow_policy, output_policy=cfg.output_policy,
                     seed=seed, debug=cfg.debug, probe_lyapunov=cfg.probe_lyapunov,
                     checkpoints=cfg.checkpoints, horizon=cfg.horizon)
    return sim.run(cfg.horizon)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return "" if x is None else str(x)


def summary_row(metrics: RunMetrics, seed: int, admissible: bool) -> dict[str, Any]:
    mom = moment_report(metrics)
    stab = rate_stability_report(metrics)
    return {
        "scheduler": metrics.scheduler, "rho": metrics.load, "seed": seed,
        "horizon": metrics.horizon, "warmup": metrics.warmup,
        "latency_count": mom.latency.count, "latency_m1": mom.latency.first,
        "latency_m2": mom.latency.second, "log_latency_m1": mom.latency.log_first,
        "log_latency_m2": mom.latency.log_second,
        "oq_count": mom.oq_delay.count, "oq_m1": mom.oq_delay.first,
        "oq_m2": mom.oq_delay.second, "log_oq_m1": mom.oq_delay.log_first,
        "log_oq_m2": mom.oq_delay.log_second,
        "max_dev_nominal": stab.max_dev_nominal, "max_dev_empirical": stab.max_dev_empirical,
        "admissible": admissible,
    }


def write_table(path, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            values = [row[c] for c in columns] if isinstance(row, dict) else row
            w.writerow([_fmt(v) for v in values])


def write_packets_csv(path, metrics: RunMetrics) -> None:
    cols = [metrics.packets[c] for c in PACKET_COLUMNS]
    table = np.column_stack(cols) if len(cols[0]) else np.zeros((0, len(cols)), dtype=np.int64)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(PACKET_COLUMNS) + "\n")
        np.savetxt(fh, table, fmt="%d", delimiter=",")


def write_series_csv(path, sim: Simulation, checkpoints: Sequence[int]) -> None:
    """Time series at the checkpoints: (tau, L, W_total, Delta_total, theta_0..)."""
    n_out = sim.shadow.n_outputs
    cols = SERIES_COLUMNS + [f"theta_{m}" for m in range(n_out)]
    probe = sim.probe_series() if sim.probe else None
    by_tau = dict(sim.shadow.theta_series)
    rows = []
    for t in checkpoints:
        if t not in by_tau:
            continue
        if probe is not None and t < len(probe["L"]):
            extra = [probe["L"][t], int(probe["W"][t]), probe["Delta"][t]]
        else:
            extra = [None, None, None]
        rows.append([t] + extra + list(by_tau[t]))
    write_table(path, cols, rows)


@dataclass
class ExperimentResult:
    metrics: RunMetrics
    summary: dict[str, Any]
    files: dict[str, str] = field(default_factory=dict)


def run_experiment(cfg: ExperimentConfig, seed: int | None = None,
                   output_dir: str | None = None) -> ExperimentResult:
    seed = cfg.seed if seed is None else seed
    sim = simulate(cfg, seed)
    metrics = sim.metrics(cfg.warmup, cfg.load)
    admissible = check_admissibility(cfg.schedules, cfg.rates, witness=False).admissible
    row = summary_row(metrics, seed, admissible)
    result = ExperimentResult(metrics, row)
    out = output_dir if output_dir is not None else cfg.output_dir
    if out:
        os.makedirs(out, exist_ok=True)
        files = {"summary": os.path.join(out, "summary.csv"),
                 "series": os.path.join(out, "timeseries.csv")}
        write_table(files["summary"], SUMMARY_COLUMNS, [row])
        write_series_csv(files["series"], sim, cfg.checkpoints)
        if cfg.write_packets:
            files["packets"] = os.path.join(out, "packets.csv")
            write_packets_csv(files["packets"], metrics)
        result.files = files
    return result


def _replicate_one(args):
    raw, seed, rep = args
    try:
        cfg = build_config(raw)
        return rep, run_experiment(cfg, seed=seed, output_dir="").summary
    except Exception as e:
        raise RuntimeError(f"replication {rep} (seed {seed}) failed: {e}") from e


@dataclass
class ReplicationSummary:
    rows: list[dict[str, Any]]
    mean: dict[str, float]
    var: dict[str, float]


NUMERIC_FIELDS = [c for c in SUMMARY_COLUMNS if c not in ("scheduler", "rho", "seed", "admissible")]


def aggregate(rows: list[dict[str, Any]]) -> ReplicationSummary:
    """Means and sample variances across replications, folded in seed order."""
    rows = sorted(rows, key=lambda r: r["seed"])
    mean, var = {}, {}
    for c in NUMERIC_FIELDS:
        vals = [float(r[c]) for r in rows]
        mean[c] = math.fsum(vals) / len(vals)
        var[c] = (math.fsum((v - mean[c]) ** 2 for v in vals) / (len(vals) - 1)
                  if len(vals) > 1 else 0.0)
    return ReplicationSummary(rows, mean, var)


def run_replications(cfg: ExperimentConfig, n_reps: int, seeds: Sequence[int] | None = None,
                     workers: int = 1) -> ReplicationSummary:
    """Independent runs with seeds ``cfg.seed + k`` (or ``seeds``)."""
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    seeds = list(seeds) if seeds is not None else [cfg.seed + k for k in range(n_reps)]
    if len(seeds) != n_reps:
        raise ValueError("need one seed per replication")
    jobs = [(cfg.raw, s, k) for k, s in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_replicate_one, jobs))
    else:
        done = [_replicate_one(j) for j in jobs]
    return aggregate([row for _, row in done])


def run_sweep(cfg: ExperimentConfig, loads: Sequence[float], schedulers: Sequence[str],
              seeds: Sequence[int] | None = None) -> list[dict[str, Any]]:
    rows = []
    for rho in loads:
        for name in schedulers:
            sub = cfg.with_overrides(load=rho, scheduler=name)
            for s in (seeds or [cfg.seed]):
                rows.append(run_experiment(sub, seed=s, output_dir="").summary)
    return rows
