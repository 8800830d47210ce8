"""Comparison schedulers: DRAND-equivalent, Lyui, LoBaTS, LQF and link LQF."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .local_voting import FrameChange
from .schedule import Schedule
from .topology import Topology


def color_period(c: int) -> int:
    """Smallest power of two >= c."""
    if c < 1:
        raise ValueError("colors are positive")
    return 1 << (c - 1).bit_length()


def eligible(c: int, t: int) -> bool:
    per = color_period(c)
    return t % per == c % per


@dataclass
class ColorAssignment:
    """Per-node color sets; ``base`` is the color from the initial coloring."""
    base: list
    extra: list

    @classmethod
    def single(cls, colors):
        return cls(list(colors), [[] for _ in colors])

    @property
    def colors(self):
        return self.base

    def held(self, i) -> list:
        return [self.base[i], *self.extra[i]]

    def utilization(self, i) -> float:
        return sum(1.0 / color_period(c) for c in self.held(i))

    def color_count(self) -> int:
        return len(set(self.base))

    def pairs(self):
        """Flat ``(node, color)`` arrays over every held color."""
        nodes = [i for i in range(len(self.base)) for _ in self.held(i)]
        cols = [c for i in range(len(self.base)) for c in self.held(i)]
        return np.array(nodes, dtype=np.int64), np.array(cols, dtype=np.int64)


def two_hop_coloring(topo: Topology) -> ColorAssignment:
    """Greedy distance-2 coloring in ascending node id, colors from 1."""
    colors = [0] * topo.node_count
    for i in range(topo.node_count):
        used = {colors[k] for k in topo.two_hop[i]}
        c = 1
        while c in used:
            c += 1
        colors[i] = c
    return ColorAssignment.single(colors)


def lyui_transmitters(colors: ColorAssignment, topo: Topology, t: int, q=None) -> list:
    """Nodes that win slot ``t``: eligible with the largest color in their two-hop area.

    ``q`` is accepted for interface symmetry; winners with empty queues idle.
    """
    eff = _effective_colors(colors, t)
    return kernels.lyui_winners(eff, topo.conflict_u8)


def _effective_colors(colors: ColorAssignment, t: int) -> np.ndarray:
    """Largest color each node may use in slot ``t`` (0 when none is eligible)."""
    nodes, cols = colors.pairs()
    per = _periods(cols)
    ok = (t % per) == (cols % per)
    eff = np.zeros(len(colors.base), dtype=np.int64)
    np.maximum.at(eff, nodes[ok], cols[ok])
    return eff


def _periods(cols: np.ndarray) -> np.ndarray:
    per = np.ones_like(cols)
    while (per < cols).any():
        per = np.where(per < cols, per * 2, per)
    return per


def drand_schedule(topo: Topology) -> Schedule:
    """One slot per node: color c owns slot c-1 of a frame as long as the palette."""
    colors = two_hop_coloring(topo).base
    sched = Schedule(topo, max(colors))
    for i, c in enumerate(colors):
        sched.grant(i, c - 1)
    return sched


def lobats_adjust(node, colors: ColorAssignment, topo: Topology, queue_len, threshold,
                  utilization=None, max_color=None):
    """Try to give an overloaded node one more color; returns it or None.

    A color qualifies when no node in the two-hop area (nor the node itself)
    holds it and the node's utilization, the sum of 1/p(c) over its colors,
    stays at most one. ``utilization`` may supply externally estimated
    values; by default it is computed from the exact color sets.
    """
    if queue_len <= threshold:
        return None
    util = utilization[node] if utilization is not None else colors.utilization(node)
    taken = set(colors.held(node))
    for k in topo.two_hop[node]:
        taken.update(colors.held(k))
    if max_color is None:
        max_color = 4 * color_period(max(max(taken), 1))
    for c in range(1, max_color + 1):
        if c in taken:
            continue
        if util + 1.0 / color_period(c) <= 1.0 + 1e-12:
            colors.extra[node].append(c)
            return c
    return None


def lqf_slot(topo: Topology, q) -> list:
    """Longest-queue-first greedy maximal set of conflict-free transmitters."""
    order = kernels.lqf_order(np.asarray(q, dtype=np.int64))
    return sorted(kernels.greedy_admit(order, topo.conflict_u8))


def link_conflicts(topo: Topology, tx, rx, admitted) -> bool:
    adj = topo.adjacency
    for t2, r2 in admitted:
        if tx in (t2, r2) or rx in (t2, r2):
            return True
        if adj[rx, t2] or adj[r2, tx]:
            return True
    return False


def lqf_link_slot(topo: Topology, queues) -> list:
    """Link-level LQF.

    ``queues[i]`` is node i's FIFO as a sequence of next-hop ids. Returns
    ``(tx, rx, index)`` triples, ``index`` being the chosen packet's queue
    position.
    """
    lengths = np.array([len(f) for f in queues], dtype=np.int64)
    admitted = []
    out = []
    for tx in kernels.lqf_order(lengths):
        for idx, rx in enumerate(queues[tx]):
            if not link_conflicts(topo, tx, rx, admitted):
                admitted.append((tx, rx))
                out.append((tx, rx, idx))
                break
    return out


# -- scheduler objects used by the engine -------------------------------------


class DrandScheduler:
    name = "drand"
    frame_based = True

    def __init__(self, topo: Topology):
        self.topo = topo
        self.schedule = drand_schedule(topo)

    @property
    def frame_length(self):
        return self.schedule.slot_count

    def start_frame(self, q):
        # the coloring is fixed up front, so slot counts never change
        n = self.topo.node_count
        return FrameChange(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    def owners_by_slot(self):
        X = self.schedule.X
        return [np.flatnonzero(X[:, s]).tolist() for s in range(self.schedule.slot_count)]

    def end_frame(self, q_next):
        pass


class LqfScheduler:
    name = "lqf"
    frame_based = False
    link = False

    def __init__(self, topo: Topology):
        self.topo = topo

    def select(self, t, q):
        return lqf_slot(self.topo, q)

    def window(self, q):
        pass


class LyuiScheduler:
    name = "lyui"
    frame_based = False
    link = False

    def __init__(self, topo: Topology):
        self.topo = topo
        self.colors = two_hop_coloring(topo)
        self._cycle = None

    def _winners_table(self):
        # static coloring: the winner sets repeat with the largest period
        per = max(color_period(c) for c in self.colors.base)
        return [lyui_transmitters(self.colors, self.topo, t) for t in range(per)]

    def select(self, t, q):
        if self._cycle is None:
            self._cycle = self._winners_table()
        return self._cycle[t % len(self._cycle)]

    def window(self, q):
        pass


class LobatsScheduler:
    """Lyui with load-triggered extra colors.

    Every window (one configured frame of slots) nodes whose queue exceeds the
    threshold try to add a color; nodes with an empty queue give back their
    extra colors. The default threshold is twice the node's expected service
    in one window, ``2 * frame_length * utilization``.
    """

    name = "lobats"
    frame_based = False
    link = False

    def __init__(self, topo: Topology, frame_length: int, threshold=None):
        self.topo = topo
        self.frame_length = frame_length
        self.threshold = threshold
        self.colors = two_hop_coloring(topo)
        self._dirty = True
        self._cycle = None

    def node_threshold(self, i):
        if self.threshold is not None:
            return self.threshold
        return 2 * self.frame_length * self.colors.utilization(i)

    def window(self, q):
        for i in range(self.topo.node_count):
            if q[i] == 0 and self.colors.extra[i]:
                self.colors.extra[i] = []
                self._dirty = True
        for i in range(self.topo.node_count):
            if lobats_adjust(i, self.colors, self.topo, q[i], self.node_threshold(i)) is not None:
                self._dirty = True

    def select(self, t, q):
        if self._dirty:
            self._period = max(color_period(c) for i in range(self.topo.node_count)
                               for c in self.colors.held(i))
            self._cycle = {}
            self._dirty = False
        k = t % self._period
        if k not in self._cycle:
            self._cycle[k] = lyui_transmitters(self.colors, self.topo, k)
        return self._cycle[k]


class LqfLinkScheduler:
    name = "lqf_link"
    frame_based = False
    link = True

    def __init__(self, topo: Topology):
        self.topo = topo

    def select_links(self, t, fifos):
        nh = self.topo.next_hop
        return lqf_link_slot(self.topo, [_HopView(f, nh[i]) for i, f in enumerate(fifos)])

    def window(self, q):
        pass


class _HopView:
    """Lazy next-hop sequence over a packet FIFO."""

    __slots__ = ("fifo", "row")

    def __init__(self, fifo, row):
        self.fifo = fifo
        self.row = row

    def __len__(self):
        return len(self.fifo)

    def __iter__(self):
        for pkt in self.fifo:
            yield int(self.row[pkt.dst])
