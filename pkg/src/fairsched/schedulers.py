"""Maximum-weight scheduling over maximal schedules: MUCF(f), LQF, OCF, random.

Switches are solved exactly as an assignment problem over perfect matchings; any
other schedule set is solved by scanning its enumerated maximal schedules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .election import IDENTITY, UrgencyVector, WeightFunction, compute_urgencies
from .schedules import ScheduleSet, SwitchSchedules, SwitchTopology


class SchedulerKind(str, Enum):
    MUCF = "mucf"
    LQF = "lqf"
    OCF = "ocf"
    RANDOM_MAXIMAL = "random_maximal"


class TieBreak(str, Enum):
    DETERMINISTIC_LEX = "lex"
    SEEDED_RANDOM = "random"


@dataclass
class SchedulerSpec:
    kind: SchedulerKind = SchedulerKind.MUCF
    weight: WeightFunction = IDENTITY
    tie_break: TieBreak = TieBreak.DETERMINISTIC_LEX
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.kind = SchedulerKind(self.kind)
        self.tie_break = TieBreak(self.tie_break)
        self.rng = np.random.default_rng([self.seed, 0x5CED])

    @property
    def label(self) -> str:
        if self.kind is SchedulerKind.MUCF and self.weight.name != "identity":
            return f"mucf[{self.weight.name}]"
        return self.kind.value


# relative size of the tie-breaking bonus in the assignment solver
TIE_BONUS = 1e-9


def compute_weights(spec: SchedulerSpec, state, urgencies: UrgencyVector | None = None) -> np.ndarray:
    if spec.kind is SchedulerKind.MUCF:
        if urgencies is None:
            urgencies = compute_urgencies(state, spec.weight)
        return np.asarray(urgencies.weighted, dtype=float)
    if spec.kind is SchedulerKind.LQF:
        return state.q.astype(float)
    if spec.kind is SchedulerKind.OCF:
        return state.waiting_times().astype(float)
    return spec.rng.random(state.n_queues)


def max_weight_assignment(topology: SwitchTopology | int, w, spec: SchedulerSpec | None = None,
                          prefer=None) -> np.ndarray:
    """Perfect matching of maximum total weight; negative weights allowed.

    Deterministic for a given weight matrix, and unchanged when a constant is added
    to every weight. ``prefer`` marks queues (normally the non-empty ones) that win
    ties: among maximizers the matching covering most of them is returned. With a
    random tie-break the rows and columns are shuffled before solving, which picks
    among the remaining maximizers at random.
    """
    m = topology.ports if isinstance(topology, SwitchTopology) else int(topology)
    grid = np.asarray(w, dtype=float).reshape(m, m)
    # every perfect matching has M entries, so a common shift leaves the argmax alone;
    # solving on the shifted grid makes the output identical for w and w + c
    grid = grid - grid.min()
    if prefer is not None:
        # a bonus far below any real weight gap acts as a secondary objective
        eps = TIE_BONUS * max(1.0, float(grid.max())) / (m + 1)
        grid = grid + eps * np.asarray(prefer, dtype=float).reshape(m, m)
    if spec is not None and spec.tie_break is TieBreak.SEEDED_RANDOM:
        pr = spec.rng.permutation(m)
        pc = spec.rng.permutation(m)
        rows, cols = linear_sum_assignment(grid[np.ix_(pr, pc)], maximize=True)
        rows, cols = pr[rows], pc[cols]
    else:
        rows, cols = linear_sum_assignment(grid, maximize=True)
    bits = np.zeros(m * m, dtype=bool)
    bits[rows * m + cols] = True
    return bits


def max_weight_exhaustive(schedules: ScheduleSet, w, spec: SchedulerSpec | None = None,
                          prefer=None) -> np.ndarray:
    """Argmax over the enumerated maximal schedules.

    Among maximizers, those covering the most ``prefer`` queues are kept; the
    lexicographic tie-break then returns the smallest bit vector.
    """
    table = schedules.enumerate_maximal()
    w = np.asarray(w, dtype=float).ravel()
    values = table @ w
    best = values.max()
    scale = max(1.0, float(np.abs(w).sum()))
    winners = np.flatnonzero(values >= best - 1e-12 * scale)
    if prefer is not None and len(winners) > 1:
        hits = table[winners] @ np.asarray(prefer, dtype=int).ravel()
        winners = winners[hits == hits.max()]
    if spec is not None and spec.tie_break is TieBreak.SEEDED_RANDOM and len(winners) > 1:
        k = int(spec.rng.choice(winners))
    else:
        k = int(winners[0])
    return table[k].copy()


def select_schedule(spec: SchedulerSpec, state, schedules: ScheduleSet | None = None,
                    urgencies: UrgencyVector | None = None, weights=None,
                    verify: bool = False) -> np.ndarray:
    """Pick this slot's maximal schedule.

    ``verify`` cross-checks the switch solver against full enumeration (ports <= 5).
    """
    schedules = schedules if schedules is not None else state.schedules
    if weights is None:
        weights = compute_weights(spec, state, urgencies)
    # an empty queue never outweighs a non-empty one; on ties, serve fewer empty queues
    prefer = state.q > 0 if state is not None else None
    if isinstance(schedules, SwitchSchedules):
        bits = max_weight_assignment(schedules.topology, weights, spec, prefer)
        if verify and schedules.ports <= 5:
            oracle = max_weight_exhaustive(schedules, weights)
            got, want = float(weights @ bits), float(weights @ oracle)
            if abs(got - want) > 1e-9 * max(1.0, abs(want)):
                raise AssertionError(f"assignment value {got} != exhaustive {want}")
        return bits
    return max_weight_exhaustive(schedules, weights, spec, prefer)
