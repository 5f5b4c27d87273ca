"""Planner clocks.

``WorkClock`` advances by a fixed charge per primitive operation, so a run's
budget, timings and results are reproducible bit for bit. ``WallClock``
reads the monotonic clock and ignores charges.
"""

from __future__ import annotations

import time
from collections import Counter

# Seconds charged per primitive operation, fitted by least squares to CPU
# time of this implementation on a single core.
DEFAULT_RATES = {
    "state_check": 1.0e-7,       # one state against the obstacle list
    "nn_point": 5.0e-8,          # one candidate point scanned by a neighbour query
    "nn_query": 4.0e-4,          # fixed overhead of a neighbour query
    "force_pair": 5.0e-6,        # one pairwise force evaluation
    "queue_op": 2.5e-5,          # edge-queue push or pop, with its bookkeeping
    "graph_edge": 3.5e-7,        # one edge built or relaxed by the reverse search
    "graph_edge_dim": 2.0e-8,    # per edge and per squared dimension (tree descent)
    "sample": 1.0e-6,            # one random state drawn
}


class WorkClock:
    deterministic = True

    def __init__(self, rates: dict | None = None):
        self.rates = dict(DEFAULT_RATES if rates is None else rates)
        self.elapsed = 0.0
        self.counts = Counter()

    def charge(self, kind: str, count: float = 1) -> None:
        self.counts[kind] += count
        self.elapsed += self.rates[kind] * count

    def now(self) -> float:
        return self.elapsed


class WallClock:
    deterministic = False

    def __init__(self):
        self._t0 = time.monotonic()
        self.counts = Counter()

    def charge(self, kind: str, count: float = 1) -> None:
        self.counts[kind] += count

    def now(self) -> float:
        return time.monotonic() - self._t0


def make_clock(kind: str = "work", rates: dict | None = None):
    if kind == "work":
        return WorkClock(rates)
    if kind == "wall":
        return WallClock()
    raise ValueError(f"unknown clock {kind!r}")
