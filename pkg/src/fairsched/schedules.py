"""Feasible schedule sets: switch matchings, conflict-graph independent sets, explicit lists.

A schedule is a 0/1 vector over the ``N`` constrained queues. Every set here is
monotone (dropping service from a feasible schedule keeps it feasible), and
``S_max`` denotes its maximal elements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

MAX_SWITCH_ENUM = 8
MAX_GRAPH_ENUM = 24


class SizeGuardError(ValueError):
    """Exhaustive enumeration requested on a set that is too large."""


def _bits(pi, n: int) -> np.ndarray:
    arr = np.asarray(pi)
    if arr.size != n:
        raise ValueError(f"schedule has {arr.size} entries, expected {n}")
    arr = arr.ravel()
    if arr.dtype != bool:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("schedule entries must be 0 or 1")
        arr = arr.astype(bool)
    return arr


@dataclass(frozen=True)
class SwitchTopology:
    """M x M input-queued switch; queue ``(i, j)`` has index ``i * M + j``."""

    ports: int

    @property
    def n_queues(self) -> int:
        return self.ports * self.ports

    def index(self, i: int, j: int) -> int:
        return i * self.ports + j

    def pair(self, n: int) -> tuple[int, int]:
        return divmod(n, self.ports)

    def dest(self) -> np.ndarray:
        return np.tile(np.arange(self.ports), self.ports)


@dataclass(frozen=True)
class ConflictGraph:
    n_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes) or u == v:
                raise ValueError(f"bad conflict edge ({u}, {v})")

    def neighbors(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


@dataclass
class ValidationReport:
    missing_subsets: list[tuple[int, ...]] = field(default_factory=list)
    uncovered: list[int] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return not self.missing_subsets

    @property
    def covering(self) -> bool:
        return not self.uncovered

    @property
    def ok(self) -> bool:
        return self.monotone and self.covering


class ScheduleSet:
    kind = "abstract"
    n_queues: int

    def contains(self, pi) -> bool:
        raise NotImplementedError

    def maximalize(self, pi) -> np.ndarray:
        """Greedy completion to a maximal schedule, trying queues in ascending index."""
        mu = _bits(pi, self.n_queues).copy()
        if not self.contains(mu):
            raise ValueError("cannot maximalize an infeasible schedule")
        for n in range(self.n_queues):
            if not mu[n]:
                mu[n] = True
                if not self.contains(mu):
                    mu[n] = False
        return mu

    def is_maximal(self, pi) -> bool:
        mu = _bits(pi, self.n_queues).copy()
        if not self.contains(mu):
            return False
        for n in np.flatnonzero(~mu):
            mu[n] = True
            ok = self.contains(mu)
            mu[n] = False
            if ok:
                return False
        return True

    def enumerate_maximal(self) -> np.ndarray:
        """All maximal schedules as rows of a bool matrix, sorted lexicographically."""
        cached = getattr(self, "_maximal_cache", None)
        if cached is None:
            rows = sorted({tuple(int(b) for b in r) for r in self._maximal_rows()})
            cached = np.array(rows, dtype=bool).reshape(len(rows), self.n_queues)
            cached.setflags(write=False)
            self._maximal_cache = cached
        return cached

    def _maximal_rows(self) -> Iterable[Sequence[int]]:
        raise NotImplementedError

    def validate(self) -> ValidationReport:
        return ValidationReport()


class SwitchSchedules(ScheduleSet):
    kind = "switch"

    def __init__(self, ports: int):
        if ports < 1:
            raise ValueError("a switch needs at least one port")
        self.topology = SwitchTopology(ports)
        self.ports = ports
        self.n_queues = ports * ports

    def contains(self, pi) -> bool:
        m = _bits(pi, self.n_queues).reshape(self.ports, self.ports)
        return bool(m.sum(axis=1).max(initial=0) <= 1 and m.sum(axis=0).max(initial=0) <= 1)

    def maximalize(self, pi) -> np.ndarray:
        mu = _bits(pi, self.n_queues).copy()
        if not self.contains(mu):
            raise ValueError("cannot maximalize an infeasible schedule")
        grid = mu.reshape(self.ports, self.ports)
        rows = grid.any(axis=1)
        cols = grid.any(axis=0)
        for i in range(self.ports):
            if rows[i]:
                continue
            for j in range(self.ports):
                if not cols[j]:
                    grid[i, j] = rows[i] = cols[j] = True
                    break
        return mu

    def is_maximal(self, pi) -> bool:
        m = _bits(pi, self.n_queues).reshape(self.ports, self.ports)
        if not self.contains(m):
            return False
        # with equal sides, a maximal matching of the complete bipartite graph is perfect
        return int(m.sum()) == self.ports

    def _maximal_rows(self):
        if self.ports > MAX_SWITCH_ENUM:
            raise SizeGuardError(f"refusing to enumerate {self.ports}! matchings")
        for perm in itertools.permutations(range(self.ports)):
            row = np.zeros(self.n_queues, dtype=bool)
            row[np.arange(self.ports) * self.ports + np.array(perm)] = True
            yield row

    @staticmethod
    def permutation_bits(perm: Sequence[int]) -> np.ndarray:
        m = len(perm)
        row = np.zeros(m * m, dtype=bool)
        row[np.arange(m) * m + np.asarray(perm)] = True
        return row


class ConflictGraphSchedules(ScheduleSet):
    kind = "conflict_graph"

    def __init__(self, n_nodes: int, edges: Iterable[Sequence[int]]):
        self.graph = ConflictGraph(n_nodes, tuple((int(u), int(v)) for u, v in edges))
        self.n_queues = n_nodes
        e = np.array(self.graph.edges, dtype=np.int64).reshape(-1, 2)
        self._u, self._v = e[:, 0], e[:, 1]
        self._adj = self.graph.neighbors()

    def contains(self, pi) -> bool:
        b = _bits(pi, self.n_queues)
        return not bool(np.any(b[self._u] & b[self._v]))

    def maximalize(self, pi) -> np.ndarray:
        mu = _bits(pi, self.n_queues).copy()
        if not self.contains(mu):
            raise ValueError("cannot maximalize an infeasible schedule")
        for n in range(self.n_queues):
            if not mu[n] and not any(mu[k] for k in self._adj[n]):
                mu[n] = True
        return mu

    def _maximal_rows(self):
        if self.n_queues > MAX_GRAPH_ENUM:
            raise SizeGuardError(f"refusing to enumerate independent sets of {self.n_queues} nodes")
        g = nx.Graph()
        g.add_nodes_from(range(self.n_queues))
        g.add_edges_from(self.graph.edges)
        # maximal independent sets are the maximal cliques of the complement
        for clique in nx.find_cliques(nx.complement(g)):
            row = np.zeros(self.n_queues, dtype=bool)
            row[list(clique)] = True
            yield row


class ExplicitSchedules(ScheduleSet):
    """A listed family of schedules; membership is the monotone closure of the list.

    The all-idle schedule is always feasible and never needs to be listed.
    """

    kind = "explicit"

    def __init__(self, n_queues: int, schedules: Iterable[Sequence[int]]):
        self.n_queues = n_queues
        listed = []
        for s in schedules:
            listed.append(tuple(int(b) for b in _bits(s, n_queues)))
        self.listed = sorted(set(listed))
        rows = np.array(self.listed, dtype=bool).reshape(len(self.listed), n_queues)
        keep = []
        for k, r in enumerate(rows):
            dominated = any(
                np.all(rows[o] >= r) and not np.array_equal(rows[o], r)
                for o in range(len(rows)) if o != k)
            if not dominated:
                keep.append(r)
        self._max = np.array(keep, dtype=bool).reshape(len(keep), n_queues)

    def contains(self, pi) -> bool:
        b = _bits(pi, self.n_queues)
        if not b.any():
            return True
        return bool(np.any(np.all(self._max >= b, axis=1)))

    def _maximal_rows(self):
        if len(self._max) == 0:
            return [np.zeros(self.n_queues, dtype=bool)]
        return list(self._max)

    def validate(self) -> ValidationReport:
        """Check the literal list for monotone closure and per-queue coverage."""
        report = ValidationReport()
        present = set(self.listed)
        for s in self.listed:
            for n, bit in enumerate(s):
                if bit:
                    sub = s[:n] + (0,) + s[n + 1:]
                    if any(sub) and sub not in present and sub not in report.missing_subsets:
                        report.missing_subsets.append(sub)
        served = np.zeros(self.n_queues, dtype=bool)
        for s in self.listed:
            served |= np.array(s, dtype=bool)
        report.uncovered = np.flatnonzero(~served).tolist()
        return report


def contains(schedules: ScheduleSet, pi) -> bool:
    return schedules.contains(pi)


def maximalize(schedules: ScheduleSet, pi) -> np.ndarray:
    return schedules.maximalize(pi)


def enumerate_maximal(schedules: ScheduleSet) -> np.ndarray:
    return schedules.enumerate_maximal()


def validate_set(schedules: ScheduleSet) -> ValidationReport:
    return schedules.validate()
