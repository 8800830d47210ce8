"""Static unit-disk topologies.

Nodes are 0-based integers. Two nodes are one-hop neighbors when their
Euclidean distance is strictly below the radio range; the same range is used
for interference, so two nodes conflict when they are within two hops.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path


class TopologyInfeasible(RuntimeError):
    """No connected placement was found within the attempt limit."""


class Topology:
    """Immutable node placement with cached neighborhoods and routes.

    ``positions`` may be ``None`` for graph-only topologies built with
    :meth:`from_edges`; those cannot be serialized.
    """

    def __init__(self, adjacency, positions=None, range_=None,
                 width=None, height=None, seed=None):
        adj = np.array(adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        np.fill_diagonal(adj, False)
        if not (adj == adj.T).all():
            raise ValueError("adjacency must be symmetric")
        n = adj.shape[0]
        if n < 1:
            raise ValueError("topology needs at least one node")

        self.node_count = n
        self.positions = None if positions is None else np.asarray(positions, dtype=float)
        self.range = range_
        self.width = width
        self.height = height
        self.seed = seed

        self.adjacency = adj
        two = adj | ((adj.astype(np.int32) @ adj.astype(np.int32)) > 0)
        np.fill_diagonal(two, False)
        self.conflict = two
        # uint8 copy for the kernels
        self.conflict_u8 = np.ascontiguousarray(two, dtype=np.uint8)

        self.one_hop = tuple(frozenset(np.flatnonzero(adj[i]).tolist()) for i in range(n))
        self.two_hop = tuple(frozenset(np.flatnonzero(two[i]).tolist()) for i in range(n))
        self.neighbors = tuple(np.flatnonzero(adj[i]).astype(np.int64) for i in range(n))
        # N_i^(2) plus i itself, sorted: everyone whose slot ownership blocks i
        self.blockers = tuple(
            np.flatnonzero(two[i] | (np.arange(n) == i)).astype(np.int64) for i in range(n)
        )

        if n == 1:
            self.hops = np.zeros((1, 1))
        else:
            self.hops = shortest_path(adj.astype(np.int8), unweighted=True, directed=False)
        self.connected = bool(np.isfinite(self.hops).all())
        self.next_hop = self._route_table() if self.connected else None

    # -- construction -----------------------------------------------------

    @classmethod
    def from_positions(cls, positions, range_, width=None, height=None, seed=None):
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        return cls(_disk_adjacency(pos, range_), pos, range_, width, height, seed)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]):
        adj = np.zeros((n, n), dtype=bool)
        for a, b in edges:
            adj[a, b] = adj[b, a] = True
        return cls(adj)

    # -- queries ----------------------------------------------------------

    def _route_table(self):
        n = self.node_count
        table = np.full((n, n), -1, dtype=np.int64)
        for src in range(n):
            nbrs = self.neighbors[src]
            if len(nbrs) == 0:
                continue
            want = self.hops[src] - 1
            ok = self.hops[nbrs] == want[None, :]
            # neighbors are sorted, so the first match is the lowest id
            first = ok.argmax(axis=0)
            table[src] = np.where(ok.any(axis=0), nbrs[first], -1)
            table[src, src] = -1
        return table

    def two_hop_neighborhood(self, i: int) -> frozenset:
        return self.two_hop[i]

    def shortest_path_next_hop(self, src: int, dst: int) -> int:
        if src == dst:
            raise ValueError("already at destination")
        if self.next_hop is None:
            raise TopologyInfeasible("topology is not connected")
        return int(self.next_hop[src, dst])

    def chromatic_upper_bound(self) -> int:
        return max(len(s) for s in self.two_hop) + 1

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    # -- text format --------------------------------------------------------

    def dumps(self) -> str:
        if self.positions is None:
            raise ValueError("graph-only topology has no positions to serialize")
        lines = [f"{self.node_count} {_num(self.width)} {_num(self.height)} "
                 f"{_num(self.range)} {self.seed if self.seed is not None else '-'}"]
        for i, (x, y) in enumerate(self.positions):
            lines.append(f"{i} {float(x)!r} {float(y)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Topology":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        n, width, height, range_, seed = rows[0]
        n = int(n)
        if len(rows) - 1 != n:
            raise ValueError(f"expected {n} node lines, found {len(rows) - 1}")
        pos = np.zeros((n, 2))
        for r in rows[1:]:
            pos[int(r[0])] = float(r[1]), float(r[2])
        return cls.from_positions(pos, float(range_), _parse_num(width),
                                  _parse_num(height), None if seed == "-" else int(seed))


def _num(v):
    return "-" if v is None else repr(float(v))


def _parse_num(s):
    return None if s == "-" else float(s)


def _disk_adjacency(pos: np.ndarray, range_: float) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    adj = dist < range_
    np.fill_diagonal(adj, False)
    return adj


def random_positions(n: int, width: float, height: float, rng) -> np.ndarray:
    return rng.uniform((0.0, 0.0), (width, height), size=(n, 2))


def generate_random_topology(n: int, width: float, height: float, range_: float,
                             seed: int, max_attempts: int = 10_000) -> Topology:
    """Uniform placement, redrawn until the unit-disk graph is connected."""
    if n < 2:
        raise ValueError("need at least two nodes")
    if width <= 0 or height <= 0 or range_ <= 0:
        raise ValueError("width, height and range must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        pos = random_positions(n, width, height, rng)
        adj = _disk_adjacency(pos, range_)
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp == 1:
            return Topology(adj, pos, range_, width, height, seed)
    raise TopologyInfeasible(
        f"no connected placement of {n} nodes in {width}x{height} with range {range_} "
        f"after {max_attempts} attempts"
    )


def path_topology(n: int) -> Topology:
    return Topology.from_positions([(float(i), 0.0) for i in range(n)], 1.5)


def complete_topology(n: int) -> Topology:
    angles = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return Topology.from_positions(np.c_[np.cos(angles), np.sin(angles)], 3.0)
