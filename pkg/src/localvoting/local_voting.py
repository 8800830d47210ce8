"""Local Voting slot scheduler.

Each frame every node first releases or requests free slots, then nodes with
a positive control pull slots from exchange-capable neighbors whose control
is negative. At the end of the frame the controls for the next frame are
computed from the queue lengths and slot counts of each node and of its
exchange-capable neighbors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .schedule import Schedule, exchangeable_neighbors, semi_inverse_load
from .topology import Topology, complete_topology


def round_half_away(x: float) -> int:
    """Nearest integer, ties away from zero (the control is signed)."""
    r = math.floor(abs(x) + 0.5)
    return r if x >= 0 else -r


def _control_terms(i, q_next, p, exchange_set):
    qi = int(q_next[i])
    pi = int(p[i])
    num = 0
    den = qi
    for j in exchange_set:
        qj = int(q_next[j])
        num += qi * int(p[j]) - qj * pi
        den += qj
    return num, den


def raw_control(i, q_next, p, exchange_set, gamma) -> float:
    """Unrounded control gamma * sum_j (q_i p_j - q_j p_i) / (q_i + sum_j q_j)."""
    if int(q_next[i]) == 0 or not exchange_set:
        return 0.0
    num, den = _control_terms(i, q_next, p, exchange_set)
    return gamma * num / den


def compute_control(i, q_next, p, exchange_set, gamma) -> int:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if int(q_next[i]) == 0 or not exchange_set:
        return 0
    num, den = _control_terms(i, q_next, p, exchange_set)
    if float(gamma).is_integer():
        # exact half-away rounding of an integer ratio
        g = int(gamma) * num
        r = (2 * abs(g) + den) // (2 * den)
        return r if g >= 0 else -r
    return round_half_away(gamma * num / den)


def coefficient(i, j, q_next, exchange_set) -> float:
    """Protocol weight a^{i,j} = q_j / (1 + sum_k q_k / q_i) for j in the exchange set."""
    qi = q_next[i]
    if qi == 0 or j not in exchange_set:
        return 0.0
    return q_next[j] / (1 + sum(q_next[k] for k in exchange_set) / qi)


@dataclass
class ControlState:
    gamma: float
    u: np.ndarray
    residuals: np.ndarray

    @classmethod
    def zeros(cls, n, gamma=1.0):
        return cls(gamma, np.zeros(n, dtype=np.int64), np.zeros(n))

    def update(self, q_next, p, exchange_sets):
        for i, exch in enumerate(exchange_sets):
            u = compute_control(i, q_next, p, exch, self.gamma)
            self.u[i] = u
            self.residuals[i] = raw_control(i, q_next, p, exch, self.gamma) - u


def release_and_request(i, sched: Schedule, topo: Topology, q) -> int:
    """Release everything on an empty queue, else first-fit free slots.

    A node never requests more slots than it has packets, so the grant is
    bounded by ``q_i - p_i``. Returns the signed change in slot count.
    """
    held = int(sched.X[i].sum())
    if q[i] == 0:
        if held:
            sched.release_all(i)
            return -held
        return 0
    want = int(q[i]) - held
    got = kernels.free_slots(sched.X, topo.blockers[i], want)
    for s in got:
        sched.X[i, s] = 1
    return len(got)


TRANSFER_RULES = ("literal", "capped")


def transfer_size(u_i, u_j, p_prev_j, rule="literal") -> int:
    """Slots requested from donor ``j``.

    ``literal`` is min(u_i, u_i - u_j, p_j). With u_j < 0 the middle term never
    binds, so a donor may give more than -u_j; ``capped`` uses -u_j instead.
    """
    if rule == "capped":
        return min(u_i, -u_j, p_prev_j)
    return min(u_i, u_i - u_j, p_prev_j)


def balance(i, sched: Schedule, topo: Topology, controls: ControlState, p_prev,
            rule: str = "literal") -> list:
    """Pull slots toward ``i`` while its control is positive.

    Donor choice: the exchange-capable neighbor with the smallest control
    (lowest id on ties), provided that control is negative. A donor that
    yields nothing is skipped for the rest of this call.
    """
    u = controls.u
    moves = []
    skipped = set()
    blockers = topo.blockers[i]
    while u[i] > 0:
        cands = [j for j in topo.neighbors[i].tolist() if j not in skipped]
        donors = kernels.exchange_donors(sched.X, blockers, cands)
        if not donors:
            break
        j = min(donors, key=lambda m: (u[m], m))
        if u[j] >= 0:
            break
        r = transfer_size(int(u[i]), int(u[j]), int(p_prev[j]), rule)
        slots = kernels.transferable_slots(sched.X, blockers, j, r) if r > 0 else []
        if not slots:
            skipped.add(j)
            continue
        for s in slots:
            sched.X[j, s] = 0
            sched.X[i, s] = 1
            moves.append((s, j, i))
        u[i] -= len(slots)
        u[j] += len(slots)
    return moves


@dataclass
class FrameChange:
    """Slot-count changes applied at the start of one frame."""
    requested: np.ndarray          # n_t: free grants minus releases
    exchanged: np.ndarray          # realized u_t: slots received minus given
    transfers: list = field(default_factory=list)


@dataclass
class TraceFrame:
    q: np.ndarray          # queue at frame start
    p: np.ndarray          # slots held during the frame
    q_next: np.ndarray
    x_tilde: np.ndarray
    A: np.ndarray
    B: np.ndarray
    n: np.ndarray          # non-control slot changes of this frame
    u: np.ndarray          # controls computed for the next frame
    w: np.ndarray          # rounding residuals of those controls


class LocalVotingScheduler:
    """Frame-based scheduler; the engine calls :meth:`start_frame` then :meth:`end_frame`."""

    name = "local_voting"
    frame_based = True

    def __init__(self, topo: Topology, slot_count: int, gamma: float = 1.0,
                 order: str = "load", rng=None, trace: bool = False,
                 transfer: str = "literal"):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if order not in ("id", "random", "load"):
            raise ValueError(f"unknown node order {order!r}")
        if transfer not in TRANSFER_RULES:
            raise ValueError(f"unknown transfer rule {transfer!r}")
        if order == "random" and rng is None:
            raise ValueError("random order needs an rng")
        self.topo = topo
        self.slot_count = slot_count
        self.schedule = Schedule(topo, slot_count)
        self.controls = ControlState.zeros(topo.node_count, gamma)
        self.order = order
        self.transfer = transfer
        self.rng = rng
        self.trace = [] if trace else None
        self._q_frame = None
        self._n_frame = None

    @property
    def frame_length(self):
        return self.slot_count

    def preassign(self, counts):
        """Give node i its ``counts[i]`` slots first-fit in id order (initial condition)."""
        for i, c in enumerate(counts):
            got = kernels.free_slots(self.schedule.X, self.topo.blockers[i], int(c))
            if len(got) < c:
                raise ValueError(f"cannot preassign {c} slots to node {i}")
            self.schedule.X[i, got] = 1

    def _node_order(self, q):
        n = self.topo.node_count
        if self.order == "random":
            return self.rng.permutation(n).tolist()
        if self.order == "load":
            p = self.schedule.slot_counts()
            key = [(-(q[i] / p[i]) if p[i] else -math.inf if q[i] else 0.0, i) for i in range(n)]
            return [i for _, i in sorted(key)]
        return list(range(n))

    def start_frame(self, q) -> FrameChange:
        n = self.topo.node_count
        sched = self.schedule
        p_prev = sched.slot_counts()
        order = self._node_order(q)
        requested = np.zeros(n, dtype=np.int64)
        for i in order:
            requested[i] = release_and_request(i, sched, self.topo, q)
        before = sched.slot_counts()
        moves = []
        for i in order:
            if self.controls.u[i] > 0 and q[i] > 0:
                moves.extend(balance(i, sched, self.topo, self.controls, p_prev,
                                     self.transfer))
        exchanged = sched.slot_counts() - before
        self._q_frame = np.asarray(q, dtype=np.int64).copy()
        self._n_frame = requested
        return FrameChange(requested, exchanged, moves)

    def owners_by_slot(self):
        X = self.schedule.X
        return [np.flatnonzero(X[:, s]).tolist() for s in range(self.slot_count)]

    def end_frame(self, q_next):
        topo = self.topo
        sched = self.schedule
        p = sched.slot_counts()
        exch = [exchangeable_neighbors(sched, topo, i) for i in range(topo.node_count)]
        self.controls.update(q_next, p, exch)
        if self.trace is not None:
            self.trace.append(self._trace_frame(q_next, p, exch))

    def _trace_frame(self, q_next, p, exch):
        n = self.topo.node_count
        q_next = np.asarray(q_next, dtype=np.int64).copy()
        A = np.zeros((n, n))
        for i in range(n):
            if q_next[i] == 0:
                continue
            for j in exch[i]:
                A[i, j] = coefficient(i, j, q_next, exch[i])
        B = A / np.maximum(1, q_next)[:, None]
        xt = np.array([semi_inverse_load(int(p[i]), int(q_next[i])) for i in range(n)])
        return TraceFrame(self._q_frame, p.copy(), q_next, xt, A, B,
                          self._n_frame.copy(), self.controls.u.copy(),
                          self.controls.residuals.copy())


def closed_domain_run(q, initial_slots, slot_count: int, frames: int, gamma: float = 1.0,
                      order: str = "load", transfer: str = "literal"):
    """Single collision domain with queues frozen at ``q``.

    Returns the list of slot-count vectors, one per frame (frame 0 is the
    initial allocation). Used to study semi-equalization in isolation.
    """
    n = len(q)
    topo = complete_topology(n)
    lv = LocalVotingScheduler(topo, slot_count, gamma=gamma, order=order, transfer=transfer)
    lv.preassign(initial_slots)
    q = np.asarray(q, dtype=np.int64)
    history = []
    lv.start_frame(q)
    history.append(lv.schedule.slot_counts())
    lv.end_frame(q)
    for _ in range(frames - 1):
        lv.start_frame(q)
        history.append(lv.schedule.slot_counts())
        lv.end_frame(q)
    return history


def control_trace_csv(frames) -> str:
    """Rows ``frame,node,q,p,u,w`` from traced frames (u, w are for the next frame)."""
    lines = ["frame,node,q,p,u,w"]
    for t, f in enumerate(frames):
        for i in range(len(f.q)):
            lines.append(f"{t},{i},{int(f.q[i])},{int(f.p[i])},{int(f.u[i])},{float(f.w[i])!r}")
    return "\n".join(lines) + "\n"
