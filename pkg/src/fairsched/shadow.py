"""Shadow constraint-free network.

Every arrival to the real network is copied here and joins its destination output
queue immediately. Each output line runs a work-conserving single-queue policy and
departs one copy per slot. The departure slot of a copy, ``d(p)``, is the target the
real network tries to track.

For copies still queued, :meth:`ShadowCFN.departure_time` returns the departure slot
the copy would get if no further copies arrived. Under FIFO this projection is exact
from ingest on. Under LIFO, strict priority and round robin later arrivals can push
a copy back, so the projection is recomputed whenever it is asked for.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import UNSET, BusyCycleTracker, InvariantError, PacketLog


class PolicyKind(str, Enum):
    FIFO = "fifo"
    LIFO = "lifo"
    STRICT_PRIORITY = "strict_priority"
    ROUND_ROBIN = "round_robin"


@dataclass(frozen=True)
class ShadowPolicy:
    kind: PolicyKind = PolicyKind.FIFO
    # strict priority: level per source queue, lower level served first
    classes: tuple[int, ...] | None = None

    @classmethod
    def fifo(cls) -> "ShadowPolicy":
        return cls(PolicyKind.FIFO)

    @classmethod
    def lifo(cls) -> "ShadowPolicy":
        return cls(PolicyKind.LIFO)

    @classmethod
    def round_robin(cls) -> "ShadowPolicy":
        return cls(PolicyKind.ROUND_ROBIN)

    @classmethod
    def strict_priority(cls, classes: Sequence[int]) -> "ShadowPolicy":
        return cls(PolicyKind.STRICT_PRIORITY, tuple(int(c) for c in classes))


class _FifoLine:
    def __init__(self):
        self.buf: deque[int] = deque()
        self.pushed = 0
        self.served = 0

    def __len__(self):
        return len(self.buf)

    def push(self, pid, log):
        log.shadow_seq[pid] = self.pushed
        self.pushed += 1
        self.buf.append(pid)

    def pop(self, log):
        self.served += 1
        return self.buf.popleft()

    def ahead(self, pid, log):
        return log.shadow_seq[pid] - self.served


class _LifoLine:
    def __init__(self):
        self.stack: list[int] = []

    def __len__(self):
        return len(self.stack)

    def push(self, pid, log):
        log.shadow_seq[pid] = len(self.stack)
        self.stack.append(pid)

    def pop(self, log):
        return self.stack.pop()

    def ahead(self, pid, log):
        return len(self.stack) - 1 - log.shadow_seq[pid]


class _ClassedLine:
    """FIFO sub-queues keyed by a per-source label.

    ``rotate=False`` serves the lowest non-empty label (strict priority);
    ``rotate=True`` visits labels cyclically, one packet per visit (round robin).
    """

    def __init__(self, n_labels: int, rotate: bool):
        self.subs = [deque() for _ in range(n_labels)]
        self.pushed = [0] * n_labels
        self.served = [0] * n_labels
        self.rotate = rotate
        self.pointer = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, pid, label, log):
        log.shadow_seq[pid] = self.pushed[label]
        self.pushed[label] += 1
        self.subs[label].append(pid)
        self.size += 1

    def pop(self, log):
        k = len(self.subs)
        start = self.pointer if self.rotate else 0
        for step in range(k):
            c = (start + step) % k
            if self.subs[c]:
                self.served[c] += 1
                self.size -= 1
                if self.rotate:
                    self.pointer = (c + 1) % k
                return self.subs[c].popleft()
        raise IndexError("pop from an empty line")

    def ahead(self, pid, label, log):
        depth = log.shadow_seq[pid] - self.served[label]
        if not self.rotate:
            return sum(len(self.subs[c]) for c in range(label)) + depth
        k = len(self.subs)
        my_turn = (label - self.pointer) % k
        count = 0
        for c in range(k):
            length = len(self.subs[c])
            count += min(length, depth)
            if length > depth and (c - self.pointer) % k < my_turn:
                count += 1
        return count


class ShadowCFN:
    """Constraint-free copy of the network with one policy-driven queue per output."""

    def __init__(self, dest: Sequence[int], policy: ShadowPolicy | None = None,
                 log: PacketLog | None = None, n_outputs: int | None = None,
                 debug: bool = False):
        self.dest = np.asarray(dest, dtype=np.int64)
        self.n_queues = len(self.dest)
        self.n_outputs = int(n_outputs if n_outputs is not None else self.dest.max() + 1)
        self.policy = policy or ShadowPolicy.fifo()
        self.log = log if log is not None else PacketLog()
        self.debug = debug
        self.now = 0
        self.cycles = [BusyCycleTracker() for _ in range(self.n_outputs)]
        self.ingested = np.zeros(self.n_outputs, dtype=np.int64)
        self.departed = np.zeros(self.n_outputs, dtype=np.int64)
        self._checkpoints: list[int] = []
        self._next_checkpoint = 0
        self.theta_series: list[tuple[int, list[int]]] = []

        kind = self.policy.kind
        self._label = None
        if kind is PolicyKind.FIFO:
            self.lines = [_FifoLine() for _ in range(self.n_outputs)]
        elif kind is PolicyKind.LIFO:
            self.lines = [_LifoLine() for _ in range(self.n_outputs)]
        elif kind is PolicyKind.STRICT_PRIORITY:
            if self.policy.classes is None or len(self.policy.classes) != self.n_queues:
                raise ValueError("strict priority needs one class per source queue")
            self._label = list(self.policy.classes)
            n_labels = max(self._label) + 1
            self.lines = [_ClassedLine(n_labels, rotate=False) for _ in range(self.n_outputs)]
        else:
            # round robin over source queues
            self._label = list(range(self.n_queues))
            self.lines = [_ClassedLine(self.n_queues, rotate=True) for _ in range(self.n_outputs)]

    @property
    def static_departures(self) -> bool:
        """True when projected departures never change after ingest."""
        return self.policy.kind is PolicyKind.FIFO

    def backlog(self) -> np.ndarray:
        return np.array([len(line) for line in self.lines], dtype=np.int64)

    def theta(self) -> np.ndarray:
        return np.array([c.theta for c in self.cycles], dtype=np.int64)

    def watch(self, checkpoints: Sequence[int]) -> None:
        """Record ``theta`` per output after serving each slot listed in ``checkpoints``."""
        self._checkpoints = sorted({int(t) for t in checkpoints if t >= self.now})
        self._next_checkpoint = 0

    def ingest(self, pids: Sequence[int], tau: int) -> None:
        """Copies arriving at the end of slot ``tau``, in ascending source order."""
        log = self.log
        label = self._label
        for pid in pids:
            m = log.dest[pid]
            line = self.lines[m]
            if label is None:
                line.push(pid, log)
            else:
                line.push(pid, label[log.source[pid]], log)
            self.ingested[m] += 1
        # projections are taken as seen from the next slot
        for pid in pids:
            log.shadow_proj[pid] = self._project(pid, tau + 1)

    def serve(self, tau: int) -> list[tuple[int, int]]:
        """Depart one copy from every non-empty output queue in slot ``tau``."""
        log = self.log
        shadow_dep = log.shadow_dep
        out = []
        check_fifo = self.debug and self.policy.kind is PolicyKind.FIFO
        departed = self.departed
        for m, line in enumerate(self.lines):
            cyc = self.cycles[m]
            if len(line):
                if cyc.current == 0:
                    cyc.start = tau
                cyc.current += 1
                if cyc.current > cyc.theta:
                    cyc.theta = cyc.current
                pid = line.pop(log)
                shadow_dep[pid] = tau
                departed[m] += 1
                out.append((pid, tau))
                if check_fifo and log.shadow_proj[pid] != tau:
                    raise InvariantError(
                        f"FIFO shadow departure of packet {pid} moved from "
                        f"{log.shadow_proj[pid]} to {tau}")
            else:
                cyc.record(False, tau)
        self.now = tau + 1
        if self._next_checkpoint < len(self._checkpoints) and \
                self._checkpoints[self._next_checkpoint] == tau:
            self.theta_series.append((tau, [c.theta for c in self.cycles]))
            self._next_checkpoint += 1
        return out

    def _project(self, pid: int, now: int) -> int:
        log = self.log
        line = self.lines[log.dest[pid]]
        if self._label is None:
            return now + line.ahead(pid, log)
        return now + line.ahead(pid, self._label[log.source[pid]], log)

    def departure_time(self, pid: int) -> int:
        """Actual shadow departure of ``pid`` if it left, else its projection."""
        if pid < 0 or pid >= len(self.log) or self.log.shadow_seq[pid] == UNSET:
            raise KeyError(f"packet {pid} was never ingested")
        d = self.log.shadow_dep[pid]
        if d != UNSET:
            return d
        return self.departure_time_unchecked(pid)

    def departure_time_unchecked(self, pid: int) -> int:
        d = self.log.shadow_dep[pid]
        if d != UNSET:
            return d
        if self._label is None and self.policy.kind is PolicyKind.FIFO:
            return self.log.shadow_proj[pid]
        return self._project(pid, self.now)

    def export_departures(self, path) -> None:
        """CSV of (id, arrival, shadow_dep) for every ingested copy."""
        log = self.log
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "arrival", "shadow_dep"])
            for pid in range(len(log)):
                if log.shadow_seq[pid] != UNSET:
                    w.writerow([pid, log.arrival[pid], log.shadow_dep[pid]])


def shadow_ingest(cfn: ShadowCFN, pids: Sequence[int], tau: int) -> None:
    cfn.ingest(pids, tau)


def shadow_serve(cfn: ShadowCFN, tau: int) -> list[tuple[int, int]]:
    return cfn.serve(tau)


def shadow_departure_time(cfn: ShadowCFN, pid: int) -> int:
    return cfn.departure_time(pid)
