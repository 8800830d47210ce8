"""Slot-level network simulation.

Time is a global slot counter. A packet generated at slot ``tau`` joins its
source queue at the start of ``tau``; a packet sent in slot ``tau`` reaches
the next node (or is delivered) at ``tau + 1``.

Frame-based schedulers (Local Voting, DRAND) run frames of ``frame_length``
slots: the schedule is updated from the queues at the frame start, owners
send only packets that were queued when the frame began, and controls for
the next frame are computed from the queues at its start. The remaining
schedulers choose transmitters every slot; their bookkeeping uses windows
of the configured frame length.
"""
from __future__ import annotations

import csv
import io
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .baselines import (DrandScheduler, LobatsScheduler, LqfLinkScheduler, LqfScheduler,
                        LyuiScheduler)
from .config import DEFAULT_STEADY_DURATION, ScenarioConfig
from .local_voting import LocalVotingScheduler
from .topology import Topology, generate_random_topology
from .traffic import (Connection, Packet, burst_traffic, generation_schedule, poisson_traffic,
                      preload_traffic)

log = logging.getLogger(__name__)


class SimulationStalled(RuntimeError):
    pass


class LedgerError(AssertionError):
    pass


class ConflictViolation(AssertionError):
    pass


@dataclass
class FrameRecord:
    """Per-node bookkeeping for one frame (or one window of slots).

    ``served`` counts packets of the starting backlog ``q`` that left the
    node; ``z`` counts arrivals still queued at the end, so that
    ``q_next == max(0, q - served) + z`` for every scheduler.
    """
    frame: int
    start: int
    q: np.ndarray
    p_prev: np.ndarray
    n: np.ndarray
    u: np.ndarray
    p: np.ndarray
    served: np.ndarray
    z: np.ndarray
    q_next: np.ndarray


@dataclass
class SimulationResult:
    config: ScenarioConfig
    topology: Topology
    connections: list
    packets: list
    slots: int
    frames: int
    ledger: list | None = None
    trace: list | None = None
    warnings: list = field(default_factory=list)

    @property
    def metric_cutoff(self):
        return self.config.warmup if self.config.traffic == "steady" else 0

    def delivered_packets(self):
        """Delivered packets that count toward metrics (warmup excluded in steady mode)."""
        cut = self.metric_cutoff
        return [p for p in self.packets if p.delivered is not None and p.delivered >= cut]

    def completed_connections(self):
        """Connection id -> packet list for connections fully delivered after the cutoff."""
        cut = self.metric_cutoff
        by_conn = {}
        for p in self.packets:
            by_conn.setdefault(p.conn, []).append(p)
        out = {}
        for c in self.connections:
            pk = by_conn.get(c.id, [])
            if len(pk) != c.packet_count or any(p.delivered is None for p in pk):
                continue
            if min(p.delivered for p in pk) < cut:
                continue
            out[c.id] = pk
        return out

    def packets_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["conn", "seq", "src", "dst", "created", "delivered", "hops", "retx"])
        for p in sorted(self.packets, key=lambda p: (p.conn, p.seq)):
            w.writerow([p.conn, p.seq, p.src, p.dst, p.created,
                        "" if p.delivered is None else p.delivered, p.hops, p.retx])
        return buf.getvalue()

    def connections_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["conn", "src", "dst", "start", "packet_count", "inter_arrival",
                    "delivered", "completed_at"])
        done = {}
        last = {}
        for p in self.packets:
            if p.delivered is not None:
                done[p.conn] = done.get(p.conn, 0) + 1
                last[p.conn] = max(last.get(p.conn, 0), p.delivered)
        for c in self.connections:
            k = done.get(c.id, 0)
            w.writerow([c.id, c.src, c.dst, c.start, c.packet_count, c.inter_arrival, k,
                        last[c.id] if k == c.packet_count else ""])
        return buf.getvalue()


def build_topology(cfg: ScenarioConfig) -> Topology:
    if cfg.positions is not None:
        return Topology.from_positions(np.array(cfg.positions, dtype=float), cfg.range,
                                       cfg.width, cfg.height)
    seed = rngmod.derive_seed(cfg.seed, "topology")
    return generate_random_topology(cfg.nodes, cfg.width, cfg.height, cfg.range, seed,
                                    cfg.max_attempts)


def make_scheduler(cfg: ScenarioConfig, topo: Topology):
    name = cfg.scheduler
    if name == "local_voting":
        order_rng = rngmod.stream(cfg.seed, "order") if cfg.order == "random" else None
        lv = LocalVotingScheduler(topo, cfg.frame_length, cfg.gamma, cfg.order, order_rng,
                                  trace=cfg.trace, transfer=cfg.transfer)
        if cfg.initial_slots is not None:
            lv.preassign(cfg.initial_slots)
        return lv
    if name == "drand":
        return DrandScheduler(topo)
    if name == "lyui":
        return LyuiScheduler(topo)
    if name == "lobats":
        return LobatsScheduler(topo, cfg.frame_length, cfg.lobats_threshold)
    if name == "lqf":
        return LqfScheduler(topo)
    if name == "lqf_link":
        return LqfLinkScheduler(topo)
    raise ValueError(f"unknown scheduler {name!r}")


def make_traffic(cfg: ScenarioConfig, topo: Topology, horizon: int) -> list[Connection]:
    rng = rngmod.stream(cfg.seed, "traffic")
    n = topo.node_count
    if cfg.traffic == "burst":
        return burst_traffic(n, cfg.connections, rng, cfg.packets, cfg.inter_arrival)
    if cfg.traffic == "steady":
        return poisson_traffic(n, cfg.arrival_rate, cfg.mean_duration, horizon, rng,
                               cfg.inter_arrival)
    return preload_traffic(cfg.initial_queues, topo)


def transmit(tx: int, fifo: deque, index: int, loss: float, rng, next_hop: int,
             slot: int):
    """Send the packet at ``fifo[index]`` (the head for FIFO service).

    Returns ``None`` when the transmission is lost (the packet stays put),
    else the packet, dequeued, with its hop bookkeeping advanced.
    """
    pkt = fifo[index]
    if loss > 0.0 and rng.random() < loss:
        pkt.retx += 1
        return None
    if index == 0:
        fifo.popleft()
    else:
        del fifo[index]
    pkt.hops += 1
    pkt.waits.append(slot + 1 - pkt.arrived)
    pkt.arrived = slot + 1
    return pkt


class Simulation:
    """Mutable simulation state; :func:`run` drives it to completion."""

    def __init__(self, cfg: ScenarioConfig, topo: Topology | None = None,
                 keep_ledger: bool = False, on_transmit=None, check: bool = True):
        self.cfg = cfg
        self.topo = topo if topo is not None else build_topology(cfg)
        n = self.topo.node_count
        if cfg.initial_queues is not None and len(cfg.initial_queues) != n:
            raise ValueError("initial_queues must list one value per node")
        self.scheduler = make_scheduler(cfg, self.topo)
        self.frame_length = (self.scheduler.frame_length if self.scheduler.frame_based
                             else cfg.frame_length)
        self.warnings = []
        bound = self.topo.chromatic_upper_bound()
        if self.scheduler.frame_based and self.frame_length < bound:
            msg = (f"frame length {self.frame_length} is below the chromatic bound {bound}; "
                   "some nodes may get no slot while neighbors hold several")
            log.warning(msg)
            self.warnings.append(msg)
        self.horizon = (cfg.duration or DEFAULT_STEADY_DURATION) if cfg.traffic == "steady" else None
        self.connections = make_traffic(cfg, self.topo, self.horizon or 0)
        self.conn_by_id = {c.id: c for c in self.connections}
        self.gen = generation_schedule(self.connections)
        self.gen_pos = 0
        self.total_packets = len(self.gen)
        self.fifos = [deque() for _ in range(n)]
        self.packets = []
        self.delivered = 0
        self.slot = 0
        self.frame = 0
        self.last_progress = 0
        self.loss_rng = rngmod.stream(cfg.seed, "loss")
        self.next_hop = self.topo.next_hop
        self.ledger = [] if keep_ledger else None
        self.on_transmit = on_transmit
        self.check = check
        if self.scheduler.frame_based:
            self._p_prev = self.scheduler.schedule.slot_counts()
        else:
            self._p_prev = np.zeros(n, dtype=np.int64)
        self._conflict = self.topo.conflict

    # -- traffic ----------------------------------------------------------

    def _generate(self, upto: int, z=None):
        gen = self.gen
        while self.gen_pos < len(gen) and gen[self.gen_pos, 0] <= upto:
            t, cid, seq = (int(v) for v in gen[self.gen_pos])
            c = self.conn_by_id[cid]
            pkt = Packet(cid, seq, c.src, c.dst, t, arrived=t)
            self.packets.append(pkt)
            self.fifos[c.src].append(pkt)
            if z is not None:
                z[c.src] += 1
            self.gen_pos += 1

    def queue_lengths(self) -> np.ndarray:
        return np.fromiter((len(f) for f in self.fifos), dtype=np.int64, count=len(self.fifos))

    def done(self) -> bool:
        if self.horizon is not None:
            return self.slot >= self.horizon
        return self.delivered == self.total_packets and self.gen_pos == len(self.gen)

    def _forward(self, tx, pkt, z):
        nh = int(self.next_hop[tx, pkt.dst])
        if nh == pkt.dst:
            pkt.delivered = self.slot + 1
            self.delivered += 1
            self.last_progress = self.slot
        else:
            self.fifos[nh].append(pkt)
            z[nh] += 1
        return nh

    def _check_set(self, txs):
        if not self.check or len(txs) < 2:
            return
        idx = np.asarray(txs)
        if self._conflict[np.ix_(idx, idx)].any():
            raise ConflictViolation(f"conflicting transmitters {sorted(txs)} in slot {self.slot}")

    def _check_links(self, links):
        if not self.check:
            return
        adj = self.topo.adjacency
        for a in range(len(links)):
            t1, r1 = links[a]
            for b in range(a + 1, len(links)):
                t2, r2 = links[b]
                if len({t1, r1, t2, r2}) < 4 or adj[r1, t2] or adj[r2, t1]:
                    raise ConflictViolation(f"links {links[a]} and {links[b]} collide in slot {self.slot}")

    def _stall_guard(self):
        if self.horizon is None and self.slot - self.last_progress > self.cfg.stall_window:
            raise SimulationStalled(
                f"no delivery for {self.cfg.stall_window} slots (slot {self.slot}, "
                f"{self.delivered}/{self.total_packets} delivered, "
                f"queues {self.queue_lengths().tolist()})")

    # -- frame-based --------------------------------------------------------

    def step_frame(self) -> FrameRecord:
        sch = self.scheduler
        n = self.topo.node_count
        start = self.slot
        self._generate(start)
        q = self.queue_lengths()
        change = sch.start_frame(q)
        p = sch.schedule.slot_counts()
        owners = sch.owners_by_slot()
        budget = q.copy()
        served = np.zeros(n, dtype=np.int64)
        z = np.zeros(n, dtype=np.int64)
        loss = self.cfg.loss
        for s in range(self.frame_length):
            if s:
                self._generate(self.slot, z)
            txs = [i for i in owners[s] if budget[i] > 0]
            self._check_set(owners[s])
            sent = []
            for i in txs:
                pkt = transmit(i, self.fifos[i], 0, loss, self.loss_rng, 0, self.slot)
                if pkt is None:
                    sent.append((i, -1))
                    continue
                budget[i] -= 1
                served[i] += 1
                sent.append((i, self._forward(i, pkt, z)))
            if self.on_transmit is not None:
                self.on_transmit(self.slot, [i for i, _ in sent], None)
            self.slot += 1
        self._generate(self.slot, z)
        q_next = self.queue_lengths()
        rec = FrameRecord(self.frame, start, q, self._p_prev, change.requested,
                          change.exchanged, p, served, z, q_next)
        self._verify(rec)
        sch.end_frame(q_next)
        self._p_prev = p
        self.frame += 1
        return rec

    # -- slot-based ---------------------------------------------------------

    def step_window(self) -> FrameRecord:
        sch = self.scheduler
        n = self.topo.node_count
        start = self.slot
        self._generate(start)
        q = self.queue_lengths()
        sch.window(q)
        p = np.zeros(n, dtype=np.int64)
        served = np.zeros(n, dtype=np.int64)
        z = np.zeros(n, dtype=np.int64)
        loss = self.cfg.loss
        for s in range(self.frame_length):
            if s:
                self._generate(self.slot, z)
            if sch.link:
                picks = sch.select_links(self.slot, self.fifos)
                self._check_links([(t, r) for t, r, _ in picks])
                txs = []
                for tx, rx, idx in picks:
                    p[tx] += 1
                    txs.append(tx)
                    old = self.fifos[tx][idx].arrived <= start
                    pkt = transmit(tx, self.fifos[tx], idx, loss, self.loss_rng, rx, self.slot)
                    if pkt is not None:
                        self._count_service(tx, old, served, z)
                        self._forward(tx, pkt, z)
                if self.on_transmit is not None:
                    self.on_transmit(self.slot, txs, [(t, r) for t, r, _ in picks])
            else:
                ql = [len(f) for f in self.fifos]
                winners = sch.select(self.slot, ql)
                self._check_set(winners)
                txs = []
                for i in winners:
                    p[i] += 1
                    if not self.fifos[i]:
                        continue
                    txs.append(i)
                    old = self.fifos[i][0].arrived <= start
                    pkt = transmit(i, self.fifos[i], 0, loss, self.loss_rng, 0, self.slot)
                    if pkt is not None:
                        self._count_service(i, old, served, z)
                        self._forward(i, pkt, z)
                if self.on_transmit is not None:
                    self.on_transmit(self.slot, txs, None)
            self.slot += 1
            if self.done():
                break
            self._stall_guard()
        self._generate(self.slot, z)
        q_next = self.queue_lengths()
        rec = FrameRecord(self.frame, start, q, self._p_prev, p - self._p_prev,
                          np.zeros(n, dtype=np.int64), p, served, z, q_next)
        self._verify(rec)
        self._p_prev = p
        self.frame += 1
        return rec

    @staticmethod
    def _count_service(i, old, served, z):
        # served counts the window-start backlog; a packet that arrived inside
        # the window and already left is netted out of z instead
        if old:
            served[i] += 1
        else:
            z[i] -= 1

    def _verify(self, rec: FrameRecord):
        if self.ledger is not None:
            self.ledger.append(rec)
        if not self.check:
            return
        if not np.array_equal(rec.p, rec.p_prev + rec.n + rec.u):
            raise LedgerError(f"slot ledger broken in frame {rec.frame}")
        expect = np.maximum(0, rec.q - rec.served) + rec.z
        cap = np.minimum(rec.p, rec.q)
        if not np.array_equal(rec.q_next, expect):
            raise LedgerError(f"queue ledger broken in frame {rec.frame}")
        if (rec.served > cap).any():
            raise LedgerError(f"served more than allowed in frame {rec.frame}")
        in_flight = sum(len(f) for f in self.fifos)
        if in_flight + self.delivered != len(self.packets):
            raise LedgerError(f"packet conservation broken in frame {rec.frame}")

    def run(self) -> SimulationResult:
        step = self.step_frame if self.scheduler.frame_based else self.step_window
        while not self.done():
            step()
            self._stall_guard()
        trace = getattr(self.scheduler, "trace", None)
        return SimulationResult(self.cfg, self.topo, self.connections, self.packets,
                                self.slot, self.frame, self.ledger,
                                trace if isinstance(trace, list) else None, self.warnings)


def run(cfg: ScenarioConfig, topo: Topology | None = None, keep_ledger: bool = False,
        on_transmit=None) -> SimulationResult:
    """Simulate one scenario; deterministic for a fixed ``cfg.seed``."""
    return Simulation(cfg, topo, keep_ledger, on_transmit).run()


def run_frames(cfg: ScenarioConfig, frames: int, topo: Topology | None = None,
               on_transmit=None) -> SimulationResult:
    """Run exactly ``frames`` frames (or windows), regardless of traffic state."""
    sim = Simulation(cfg, topo, keep_ledger=True, on_transmit=on_transmit)
    step = sim.step_frame if sim.scheduler.frame_based else sim.step_window
    for _ in range(frames):
        step()
    trace = getattr(sim.scheduler, "trace", None)
    return SimulationResult(cfg, sim.topo, sim.connections, sim.packets, sim.slot, sim.frame,
                            sim.ledger, trace if isinstance(trace, list) else None, sim.warnings)
