"""Packets, connections and traffic generators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(slots=True)
class Packet:
    conn: int
    seq: int
    src: int
    dst: int
    created: int
    delivered: int | None = None
    arrived: int = 0          # slot it entered the current node's queue
    hops: int = 0
    retx: int = 0
    waits: list = field(default_factory=list)   # per-hop queueing + service

    @property
    def delay(self):
        if self.delivered is None:
            return None
        return self.delivered - self.created


@dataclass(frozen=True)
class Connection:
    id: int
    src: int
    dst: int
    start: int
    packet_count: int
    inter_arrival: int = 5

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("source and destination must differ")
        if self.packet_count < 1:
            raise ValueError("packet_count must be >= 1")
        if self.inter_arrival < 0 or self.start < 0:
            raise ValueError("start and inter_arrival must be non-negative")

    def generation_times(self):
        return [self.start + k * self.inter_arrival for k in range(self.packet_count)]


def _random_pair(n, rng):
    src = int(rng.integers(n))
    dst = int(rng.integers(n - 1))
    if dst >= src:
        dst += 1
    return src, dst


def burst_traffic(n: int, connections: int, rng, packets: int = 100,
                  inter_arrival: int = 5) -> list[Connection]:
    """``connections`` distinct ordered (src, dst) pairs, all starting at slot 0."""
    if connections == 0:
        return []
    total = n * (n - 1)
    if connections > total:
        raise ValueError(f"only {total} distinct pairs among {n} nodes")
    picks = rng.choice(total, size=connections, replace=False)
    out = []
    for cid, k in enumerate(picks.tolist()):
        src, r = divmod(k, n - 1)
        dst = r + 1 if r >= src else r
        out.append(Connection(cid, src, dst, 0, packets, inter_arrival))
    return out


def poisson_traffic(n: int, rate: float, mean_duration: float, horizon: int, rng,
                    inter_arrival: int = 5) -> list[Connection]:
    """Poisson connection arrivals over ``[0, horizon)``.

    Each connection lasts an exponential time with mean ``mean_duration`` and
    carries ``max(1, floor(duration / inter_arrival))`` packets.
    """
    if rate <= 0 or mean_duration <= 0:
        raise ValueError("rate and mean_duration must be positive")
    out = []
    t = 0.0
    while horizon > 0:
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        duration = rng.exponential(mean_duration)
        src, dst = _random_pair(n, rng)
        count = max(1, math.floor(duration / inter_arrival))
        out.append(Connection(len(out), src, dst, int(t), count, inter_arrival))
    return out


def preload_traffic(queues, topo) -> list[Connection]:
    """Node i starts with ``queues[i]`` packets, all for a one-hop neighbor.

    Used for closed-domain experiments where service alone drains queues.
    """
    out = []
    for i, q in enumerate(queues):
        if q <= 0:
            continue
        nbrs = topo.neighbors[i]
        if len(nbrs) == 0:
            raise ValueError(f"node {i} has no neighbor to send to")
        out.append(Connection(len(out), i, int(nbrs[0]), 0, int(q), 0))
    return out


def generation_schedule(connections) -> np.ndarray:
    """Rows ``(time, conn, seq)`` sorted by time then connection, as int64."""
    rows = [(t, c.id, k) for c in connections for k, t in enumerate(c.generation_times())]
    if not rows:
        return np.zeros((0, 3), dtype=np.int64)
    arr = np.array(rows, dtype=np.int64)
    return arr[np.lexsort((arr[:, 2], arr[:, 1], arr[:, 0]))]
