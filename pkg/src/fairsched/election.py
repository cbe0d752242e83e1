"""Cardinal ranked election and the urgency weights built from the shadow network.

Head-of-line packets are the voters and schedules the candidates. A packet gives
every schedule that serves it the value of its urgency and every other schedule 0,
so summing votes per candidate is the same as ``<U, pi>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def gm_scores(votes) -> np.ndarray:
    """Net score of each candidate: column sums of the voters x candidates matrix."""
    a = np.asarray(votes, dtype=float)
    if a.ndim != 2:
        raise ValueError("votes must be a voters x candidates matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("votes must be finite")
    return a.sum(axis=0)


@dataclass(frozen=True)
class Ranking:
    order: np.ndarray  # candidates, best first
    scores: np.ndarray
    tie_broken: bool  # some scores were equal; ties went to the lower index

    def position(self) -> np.ndarray:
        pos = np.empty_like(self.order)
        pos[self.order] = np.arange(len(self.order))
        return pos

    def prefers(self, c: int, c2: int) -> bool:
        pos = self.position()
        return bool(pos[c] < pos[c2])


def gm_rank(votes) -> Ranking:
    scores = gm_scores(votes)
    order = np.argsort(-scores, kind="stable")
    tie = len(np.unique(scores)) < len(scores)
    return Ranking(order=order, scores=scores, tie_broken=tie)


class WeightFunction:
    """Non-decreasing piecewise-linear ``f`` with ``f(0) = 0``.

    ``breakpoints`` are the kinks in increasing order and ``slopes`` has one more
    entry than ``breakpoints``. Every slope must lie in ``[1/rho, rho]``, which makes
    ``f`` bi-Lipschitz with constant ``rho``. ``antiderivative`` is exact.
    """

    def __init__(self, breakpoints: Sequence[float] = (), slopes: Sequence[float] = (1.0,),
                 rho: float = 2.0, name: str = "piecewise_linear"):
        bps = [float(b) for b in breakpoints]
        sl = [float(s) for s in slopes]
        if len(sl) != len(bps) + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not rho > 1:
            raise ValueError("rho must exceed 1")
        for s in sl:
            if not (1.0 / rho - 1e-12 <= s <= rho + 1e-12):
                raise ValueError(f"slope {s} outside [1/rho, rho] for rho={rho}")
        self.breakpoints = tuple(bps)
        self.slopes = tuple(sl)
        self.rho = float(rho)
        self.name = name

        # knots = breakpoints plus 0; interval i lies left of knot i
        knots = sorted(set(bps) | {0.0})
        seg_slopes = [sl[int(np.searchsorted(bps, knots[0], side="left"))]]
        for k in knots:
            seg_slopes.append(sl[int(np.searchsorted(bps, k, side="right"))])
        self._knots = np.array(knots)
        self._seg = np.array(seg_slopes)
        z = knots.index(0.0)
        fv = np.zeros(len(knots))
        Fv = np.zeros(len(knots))
        for i in range(z + 1, len(knots)):
            h = knots[i] - knots[i - 1]
            s = self._seg[i]
            fv[i] = fv[i - 1] + s * h
            Fv[i] = Fv[i - 1] + fv[i - 1] * h + 0.5 * s * h * h
        for i in range(z - 1, -1, -1):
            h = knots[i] - knots[i + 1]
            s = self._seg[i + 1]
            fv[i] = fv[i + 1] + s * h
            Fv[i] = Fv[i + 1] + fv[i + 1] * h + 0.5 * s * h * h
        self._fv = fv
        self._Fv = Fv
        self.is_identity = self.slopes == (1.0,)

    @classmethod
    def identity(cls) -> "WeightFunction":
        return cls((), (1.0,), rho=2.0, name="identity")

    @classmethod
    def linear(cls, slope: float, rho: float | None = None) -> "WeightFunction":
        if slope <= 0:
            raise ValueError("slope must be positive")
        return cls((), (slope,), rho=rho or max(2.0, slope, 1.0 / slope), name="linear")

    def _locate(self, x: np.ndarray):
        idx = np.searchsorted(self._knots, x, side="right") - 1
        anchor = np.maximum(idx, 0)
        slope = self._seg[idx + 1]
        return anchor, slope

    def __call__(self, x):
        if self.is_identity:
            return np.asarray(x, dtype=float)
        x = np.asarray(x, dtype=float)
        a, s = self._locate(x)
        return self._fv[a] + s * (x - self._knots[a])

    def antiderivative(self, y):
        """``F(y) = integral of f from 0 to y``; non-negative with ``F(0) = 0``."""
        y = np.asarray(y, dtype=float)
        if self.is_identity:
            return 0.5 * y * y
        a, s = self._locate(y)
        h = y - self._knots[a]
        return self._Fv[a] + self._fv[a] * h + 0.5 * s * h * h

    def to_dict(self) -> dict:
        if self.name == "identity":
            return {"kind": "identity"}
        if self.name == "linear":
            return {"kind": "linear", "slope": self.slopes[0], "rho": self.rho}
        return {"kind": "piecewise_linear", "breakpoints": list(self.breakpoints),
                "slopes": list(self.slopes), "rho": self.rho}

    def __repr__(self):
        return f"WeightFunction({self.to_dict()})"


IDENTITY = WeightFunction.identity()


def eval_weight(f: WeightFunction, x):
    return f(x)


def eval_antiderivative(f: WeightFunction, y):
    return f.antiderivative(y)


@dataclass(frozen=True)
class UrgencyVector:
    raw: np.ndarray       # tau - d_n(tau), integer slots
    weighted: np.ndarray  # f(raw)
    nonempty: np.ndarray


def urgencies_from(tau: int, hol_shadow: np.ndarray, nonempty: np.ndarray,
                   f: WeightFunction = IDENTITY) -> UrgencyVector:
    """Urgency of each queue given the shadow departure of its HoL packet.

    An empty queue takes ``min(0, smallest non-empty urgency)``; with every queue
    empty all urgencies are 0.
    """
    raw = tau - hol_shadow
    if nonempty.all():
        pass
    elif nonempty.any():
        raw = raw.copy()
        raw[~nonempty] = min(0, int(raw[nonempty].min()))
    else:
        raw = np.zeros_like(raw)
    return UrgencyVector(raw=raw, weighted=f(raw), nonempty=nonempty)


def compute_urgencies(state, f: WeightFunction = IDENTITY) -> UrgencyVector:
    """Urgencies at the start of the current slot of ``state`` (its lockstep shadow
    supplies the departure times)."""
    d = state.hol_shadow_departures()
    return urgencies_from(state.tau, d, state.hol_pid >= 0, f)


def schedule_value(urg: UrgencyVector | np.ndarray, pi) -> float:
    w = urg.weighted if isinstance(urg, UrgencyVector) else np.asarray(urg, dtype=float)
    p = np.asarray(pi).ravel()
    if p.shape != w.shape:
        raise ValueError("schedule and urgency lengths differ")
    return float(np.dot(w, p))
