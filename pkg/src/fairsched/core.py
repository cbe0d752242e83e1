"""Discrete-time constrained queueing network: packets, queues, arrivals, slot update.

Timeline of one slot ``tau``:

1. the state is observed (queue lengths, head-of-line packets) and a schedule is chosen;
2. service happens mid-slot: every scheduled non-empty constrained queue moves its
   head-of-line packet to the destination output queue;
3. every non-empty output queue (real and shadow) departs one packet;
4. exogenous arrivals land at the end of the slot and are first servable at ``tau + 1``.
"""

from __future__ import annotations

import heapq
from array import array
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

UNSET = -1


class ScheduleError(ValueError):
    """A schedule outside the feasible set was handed to the network."""


class InvariantError(AssertionError):
    """A per-slot invariant failed during a debug run."""


@dataclass
class SlotClock:
    tau: int = 0

    def tick(self) -> int:
        self.tau += 1
        return self.tau


@dataclass(frozen=True)
class Packet:
    id: int
    arrival_slot: int
    source_queue: int
    dest_output: int
    shadow_departure: Optional[int] = None
    real_departure: Optional[int] = None


class PacketLog:
    """Columnar store of every packet seen by a run, indexed by packet id.

    Ids are handed out by a global monotone counter in arrival order.
    """

    def __init__(self):
        self.arrival = array("q")
        self.source = array("q")
        self.dest = array("q")
        self.shadow_dep = array("q")
        self.real_dep = array("q")
        # position key assigned by the shadow queue on ingest (policy specific)
        self.shadow_seq = array("q")
        # shadow departure projected at ingest time
        self.shadow_proj = array("q")

    def __len__(self) -> int:
        return len(self.arrival)

    def new(self, tau: int, source: int, dest: int) -> int:
        pid = len(self.arrival)
        self.arrival.append(tau)
        self.source.append(source)
        self.dest.append(dest)
        self.shadow_dep.append(UNSET)
        self.real_dep.append(UNSET)
        self.shadow_seq.append(UNSET)
        self.shadow_proj.append(UNSET)
        return pid

    def extend(self, tau: int, sources: list[int], dests: list[int]) -> range:
        start = len(self.arrival)
        k = len(sources)
        self.arrival.extend([tau] * k)
        self.source.extend(sources)
        self.dest.extend(dests)
        blank = [UNSET] * k
        self.shadow_dep.extend(blank)
        self.real_dep.extend(blank)
        self.shadow_seq.extend(blank)
        self.shadow_proj.extend(blank)
        return range(start, start + k)

    def packet(self, pid: int) -> Packet:
        sd = self.shadow_dep[pid]
        rd = self.real_dep[pid]
        return Packet(
            id=pid,
            arrival_slot=self.arrival[pid],
            source_queue=self.source[pid],
            dest_output=self.dest[pid],
            shadow_departure=None if sd == UNSET else sd,
            real_departure=None if rd == UNSET else rd,
        )

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "id": np.arange(len(self.arrival), dtype=np.int64),
            "n": np.frombuffer(self.source, dtype=np.int64).copy(),
            "m": np.frombuffer(self.dest, dtype=np.int64).copy(),
            "arrival": np.frombuffer(self.arrival, dtype=np.int64).copy(),
            "shadow_dep": np.frombuffer(self.shadow_dep, dtype=np.int64).copy(),
            "real_dep": np.frombuffer(self.real_dep, dtype=np.int64).copy(),
        }


@dataclass
class BusyCycleTracker:
    """Busy cycles of a unit-speed queue.

    A cycle is a maximal run of consecutive slots in which the queue is non-empty at
    service time. ``theta`` is the longest cycle seen so far, open cycle included.
    """

    start: int = UNSET
    current: int = 0
    completed: list[int] = field(default_factory=list)
    theta: int = 0
    idle_slots: int = 0

    def record(self, busy: bool, tau: int) -> None:
        if busy:
            if self.current == 0:
                self.start = tau
            self.current += 1
            if self.current > self.theta:
                self.theta = self.current
        else:
            self.idle_slots += 1
            if self.current:
                self.completed.append(self.current)
                self.current = 0
                self.start = UNSET


class ArrivalProcess:
    """Independent Bernoulli arrivals, one coin per queue per slot.

    Coins are drawn in blocks of ``block`` slots; block ``k`` uses the generator seeded
    with ``(seed, k)``, so any slot can be sampled in any order and the trajectory
    depends only on ``(rates, seed, block)``.
    """

    def __init__(self, rates: Sequence[float], seed: int = 0, block: int = 4096):
        rates = np.asarray(rates, dtype=float).ravel()
        if np.any(rates < 0) or np.any(rates > 1) or not np.all(np.isfinite(rates)):
            raise ValueError("arrival rates must lie in [0, 1]")
        self.rates = rates
        self.seed = int(seed)
        self.block = int(block)
        self._chunk = -1
        self._coins: np.ndarray | None = None

    @property
    def n_queues(self) -> int:
        return len(self.rates)

    def sample(self, tau: int) -> np.ndarray:
        k, r = divmod(tau, self.block)
        if k != self._chunk:
            rng = np.random.default_rng([self.seed, k])
            self._coins = rng.random((self.block, len(self.rates))) < self.rates
            self._chunk = k
        return self._coins[r]


def sample_arrivals(proc: ArrivalProcess, tau: int) -> np.ndarray:
    return proc.sample(tau)


class OutputPolicy(str, Enum):
    FIFO = "fifo"
    SHADOW_DEPARTURE_ORDER = "shadow_order"
    STRICT_PRIORITY = "strict_priority"


class OutputQueue:
    """Unit-speed output line buffer of the real network.

    FIFO serves in order of arrival at the output queue (same-slot arrivals in
    ascending source index). SHADOW_DEPARTURE_ORDER keeps the buffer sorted by shadow
    departure, ties by arrival slot then source. STRICT_PRIORITY serves the lowest
    class first, FIFO within a class.
    """

    def __init__(self, index: int, policy: OutputPolicy = OutputPolicy.FIFO,
                 log: PacketLog | None = None, priority: Sequence[int] | None = None):
        self.index = index
        self.policy = OutputPolicy(policy)
        self.log = log
        self.priority = priority
        self.cycles = BusyCycleTracker()
        self._fifo: deque[int] = deque()
        self._heap: list[tuple] = []
        self._count = 0

    def __len__(self) -> int:
        return len(self._fifo) if self.policy is OutputPolicy.FIFO else len(self._heap)

    def push(self, pid: int, shadow_departure: int = UNSET) -> None:
        if self.policy is OutputPolicy.FIFO:
            self._fifo.append(pid)
            return
        log = self.log
        self._count += 1
        if self.policy is OutputPolicy.SHADOW_DEPARTURE_ORDER:
            key = (shadow_departure, log.arrival[pid], log.source[pid], self._count)
        else:
            key = (self.priority[log.source[pid]], self._count)
        heapq.heappush(self._heap, (key, pid))

    def peek_all(self) -> list[int]:
        if self.policy is OutputPolicy.FIFO:
            return list(self._fifo)
        return [pid for _, pid in sorted(self._heap)]

    def serve(self, tau: int) -> Optional[int]:
        fifo = self.policy is OutputPolicy.FIFO
        busy = bool(self._fifo) if fifo else bool(self._heap)
        self.cycles.record(busy, tau)
        if not busy:
            return None
        pid = self._fifo.popleft() if fifo else heapq.heappop(self._heap)[1]
        if self.log is not None:
            self.log.real_dep[pid] = tau
        return pid


def serve_output_queue(oq: OutputQueue, tau: int) -> Optional[int]:
    return oq.serve(tau)


@dataclass(slots=True)
class SlotEvents:
    tau: int
    served: list[int]
    departed: list[int]
    arrived: list[int]
    shadow_departed: list[tuple[int, int]]


class NetworkState:
    """Constrained queues and output queues of the real network, in lockstep with a
    shadow constraint-free network fed copies of the same arrivals.

    Head-of-line bookkeeping is kept in flat arrays (``hol_pid``, ``hol_arrival``,
    ``hol_shadow``) so urgencies and waiting times are computed without touching
    the packet buffers.
    """

    def __init__(self, schedules, shadow, dest: Sequence[int], *,
                 output_policy: OutputPolicy = OutputPolicy.FIFO,
                 priority: Sequence[int] | None = None,
                 log: PacketLog | None = None, debug: bool = False):
        self.schedules = schedules
        n = schedules.n_queues
        self.n_queues = n
        self.dest = np.asarray(dest, dtype=np.int64)
        if self.dest.shape != (n,):
            raise ValueError(f"dest must have {n} entries")
        self.n_outputs = int(self.dest.max()) + 1 if n else 0
        self.log = log if log is not None else shadow.log
        if shadow.log is not self.log:
            raise ValueError("network and shadow must share one packet log")
        self.shadow = shadow
        self.clock = SlotClock()
        self.buffers: list[deque[int]] = [deque() for _ in range(n)]
        self.q = np.zeros(n, dtype=np.int64)
        self.departures = np.zeros(n, dtype=np.int64)
        self.arrivals_total = np.zeros(n, dtype=np.int64)
        self.hol_pid = np.full(n, UNSET, dtype=np.int64)
        self.hol_arrival = np.full(n, UNSET, dtype=np.int64)
        self.hol_shadow = np.full(n, UNSET, dtype=np.int64)
        self.outputs = [OutputQueue(m, output_policy, self.log, priority)
                        for m in range(self.n_outputs)]
        self.departed_total = 0
        self.debug = debug
        self._dest_list = self.dest.tolist()

    @property
    def tau(self) -> int:
        return self.clock.tau

    def hol_shadow_departures(self) -> np.ndarray:
        """Shadow departure slot of every head-of-line packet (UNSET when empty)."""
        if not self.shadow.static_departures:
            cfn = self.shadow
            for n in np.flatnonzero(self.hol_pid >= 0).tolist():
                self.hol_shadow[n] = cfn.departure_time_unchecked(int(self.hol_pid[n]))
        return self.hol_shadow

    def waiting_times(self) -> np.ndarray:
        """HoL waiting time ``tau - a_n`` per queue, 0 for empty queues."""
        return np.where(self.hol_pid >= 0, self.tau - self.hol_arrival, 0)

    def output_backlog(self) -> int:
        return sum(len(oq) for oq in self.outputs)

    def _set_hol(self, n: int) -> None:
        buf = self.buffers[n]
        if buf:
            pid = buf[0]
            self.hol_pid[n] = pid
            self.hol_arrival[n] = self.log.arrival[pid]
            self.hol_shadow[n] = self.shadow.departure_time_unchecked(pid)
        else:
            self.hol_pid[n] = UNSET
            self.hol_arrival[n] = UNSET
            self.hol_shadow[n] = UNSET


def advance_slot(state: NetworkState, schedule, arrivals, trusted: bool = False) -> SlotEvents:
    """Run one slot: service, output-line departures, shadow departures, arrivals.

    The schedule is checked against the feasible set unless ``trusted`` is set by a
    caller that produced it from the set itself; debug networks always check.
    """
    tau = state.tau
    bits = np.asarray(schedule).astype(bool, copy=False).ravel()
    if (state.debug or not trusted) and not state.schedules.contains(bits):
        raise ScheduleError(f"slot {tau}: schedule not in the feasible set")
    arrivals = np.asarray(arrivals).astype(bool, copy=False).ravel()
    if arrivals.shape != (state.n_queues,):
        raise ValueError("arrival vector has the wrong length")
    q = state.q
    if state.debug:
        q_before = q.copy()

    log = state.log
    shadow = state.shadow
    buffers = state.buffers
    dest = state._dest_list
    outputs = state.outputs
    hol_pid, hol_arr, hol_sh = state.hol_pid, state.hol_arrival, state.hol_shadow
    arrival_col = log.arrival
    sh_time = shadow.departure_time_unchecked

    served_mask = bits & (q > 0)
    served = np.flatnonzero(served_mask).tolist()
    if served:
        q -= served_mask
        state.departures += served_mask
    for n in served:
        buf = buffers[n]
        pid = buf.popleft()
        if buf:
            head = buf[0]
            hol_pid[n] = head
            hol_arr[n] = arrival_col[head]
            hol_sh[n] = sh_time(head)
        else:
            hol_pid[n] = hol_arr[n] = hol_sh[n] = UNSET
        oq = outputs[dest[n]]
        if oq.policy is OutputPolicy.SHADOW_DEPARTURE_ORDER:
            oq.push(pid, sh_time(pid))
        else:
            oq.push(pid)

    departed = []
    for oq in outputs:
        pid = oq.serve(tau)
        if pid is not None:
            departed.append(pid)
    state.departed_total += len(departed)

    shadow_departed = shadow.serve(tau)

    sources = np.flatnonzero(arrivals).tolist()
    arrived = log.extend(tau, sources, [dest[n] for n in sources])
    if sources:
        shadow.ingest(arrived, tau)
        q += arrivals
        state.arrivals_total += arrivals
        for pid, n in zip(arrived, sources):
            buf = buffers[n]
            if not buf:
                hol_pid[n] = pid
                hol_arr[n] = tau
                hol_sh[n] = sh_time(pid)
            buf.append(pid)

    if state.debug:
        expected = np.maximum(q_before - bits, 0) + arrivals
        if not np.array_equal(expected, q):
            raise InvariantError(f"slot {tau}: queue recursion violated")
        held = int(q.sum()) + state.output_backlog()
        if held + state.departed_total != len(log):
            raise InvariantError(f"slot {tau}: packet conservation violated")
        if np.any(state.departures > state.arrivals_total):
            raise InvariantError(f"slot {tau}: departures exceed arrivals")

    state.clock.tick()
    return SlotEvents(tau, served, departed, list(arrived), shadow_departed)
