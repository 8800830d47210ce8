"""Per-frame slot ownership, conflict checks, loads and optimality checkers."""
from __future__ import annotations

import csv
import io

import numpy as np

from . import kernels
from .topology import Topology

# Load reported for a backlogged node that holds no slot. Larger than any
# finite load so max-load selection stays well defined.
UNBOUNDED_LOAD = 2 ** 62


class ConflictError(ValueError):
    """A mutation would make two conflicting nodes share a slot."""


class Schedule:
    """Node-to-slot assignment for one frame of ``slot_count`` slots.

    ``X[i, s] == 1`` when node ``i`` owns slot ``s``. The mutators keep the
    table conflict-free with respect to ``topo``.
    """

    def __init__(self, topo: Topology, slot_count: int):
        if slot_count < 1:
            raise ValueError("slot_count must be >= 1")
        self.topo = topo
        self.slot_count = slot_count
        self.X = np.zeros((topo.node_count, slot_count), dtype=np.uint8)

    @property
    def node_count(self):
        return self.topo.node_count

    def owners(self, s: int) -> frozenset:
        return frozenset(np.flatnonzero(self.X[:, s]).tolist())

    def owned(self, i: int) -> tuple:
        return tuple(np.flatnonzero(self.X[i]).tolist())

    def slot_counts(self) -> np.ndarray:
        return self.X.sum(axis=1, dtype=np.int64)

    def copy(self) -> "Schedule":
        other = Schedule(self.topo, self.slot_count)
        other.X[:] = self.X
        return other

    # -- mutators ---------------------------------------------------------

    def can_take(self, i: int, s: int, giver: int | None = None) -> bool:
        """Whether ``i`` may own ``s`` (optionally after ``giver`` hands it over)."""
        owners = np.flatnonzero(self.X[self.topo.blockers[i], s])
        blocking = set(self.topo.blockers[i][owners].tolist())
        blocking.discard(giver)
        return not blocking

    def grant(self, i: int, s: int):
        if self.X[i, s]:
            return
        if not self.can_take(i, s):
            raise ConflictError(f"slot {s} is blocked for node {i}")
        self.X[i, s] = 1

    def release(self, i: int, s: int):
        if not self.X[i, s]:
            raise ValueError(f"node {i} does not own slot {s}")
        self.X[i, s] = 0

    def release_all(self, i: int) -> int:
        count = int(self.X[i].sum())
        self.X[i] = 0
        return count

    def transfer(self, s: int, giver: int, taker: int):
        if not self.X[giver, s]:
            raise ValueError(f"node {giver} does not own slot {s}")
        if not self.can_take(taker, s, giver=giver):
            raise ConflictError(f"slot {s} cannot move from {giver} to {taker}")
        self.X[giver, s] = 0
        self.X[taker, s] = 1

    # -- export -------------------------------------------------------------

    def csv_rows(self, frame: int):
        for s in range(self.slot_count):
            for i in np.flatnonzero(self.X[:, s]):
                yield (frame, s, int(i))


def write_schedule_csv(snapshots, fh=None):
    """``snapshots`` is an iterable of ``(frame, Schedule)``; returns the text."""
    buf = fh or io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", "slot", "node"])
    for frame, sched in snapshots:
        w.writerows(sched.csv_rows(frame))
    return buf.getvalue() if fh is None else None


def is_conflict_free(sched: Schedule, topo: Topology) -> bool:
    X = sched.X.astype(np.int64)
    # sum over slots of x_s^T C x_s counts conflicting owner pairs
    return int(((topo.conflict.astype(np.int64) @ X) * X).sum()) == 0


def node_load(q: int, p: int) -> int:
    """Rounded queue/slot ratio, ``floor(q/p + 1/2)`` in exact arithmetic."""
    if q < 0 or p < 0:
        raise ValueError("q and p must be non-negative")
    if q == 0:
        return 0
    if p == 0:
        return UNBOUNDED_LOAD
    return (2 * q + p) // (2 * p)


def semi_inverse_load(p: int, q_next: int) -> float:
    if q_next > 0:
        return p / q_next
    return float(p)


def exchangeable_neighbors(sched: Schedule, topo: Topology, i: int) -> set:
    """One-hop neighbors that own a slot they could hand to ``i`` conflict-free."""
    return set(kernels.exchange_donors(sched.X, topo.blockers[i], topo.neighbors[i]))


def is_maximal(sched: Schedule, topo: Topology, q) -> bool:
    for j in range(topo.node_count):
        if q[j] > 0 and kernels.free_slots(sched.X, topo.blockers[j], 1):
            return False
    return True


def loads(sched: Schedule, q) -> list[int]:
    p = sched.slot_counts()
    return [node_load(int(q[i]), int(p[i])) for i in range(len(p))]


def balance_violations(sched: Schedule, topo: Topology, q) -> list[tuple[int, int]]:
    """Pairs ``(k, j)`` where the most loaded node ``k`` could profitably take a slot from ``j``.

    ``j`` ranges over neighbors able to donate a slot to ``k``; the test
    ``x_k <= x_j / (1 - 1/p_j)`` is evaluated as ``x_k (p_j - 1) <= x_j p_j``.
    """
    x = loads(sched, q)
    p = sched.slot_counts()
    k = int(np.argmax(x))
    if x[k] == 0:
        return []
    out = []
    for j in sorted(exchangeable_neighbors(sched, topo, k)):
        pj = int(p[j])
        if pj >= 2 and x[k] * (pj - 1) > x[j] * pj:
            out.append((k, j))
    return out
