"""Delivery time, delay, throughput, fairness and their aggregation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConnectionStats:
    connection_id: int
    packets: int
    delivery_time: int
    mean_delay: float
    max_delay: int
    throughput: float


def connection_stats(packets, connection_id=None) -> ConnectionStats:
    """Delivery time runs from the first generation to the last delivery."""
    pk = [p for p in packets if p.delivered is not None]
    if not pk or len(pk) != len(packets):
        raise ValueError("no delivered packets" if not pk else "undelivered packets in set")
    first = min(p.created for p in pk)
    last = max(p.delivered for p in pk)
    delays = [p.delivered - p.created for p in pk]
    delivery = last - first
    cid = pk[0].conn if connection_id is None else connection_id
    return ConnectionStats(cid, len(pk), delivery, float(np.mean(delays)), max(delays),
                           len(pk) / delivery if delivery > 0 else math.inf)


def jain_index(values) -> float:
    x = np.asarray(values, dtype=float)
    if x.size == 0 or (x < 0).any():
        raise ValueError("need non-negative values")
    sq = float((x * x).sum())
    if sq == 0:
        raise ValueError("all values are zero")
    return float(x.sum()) ** 2 / (x.size * sq)


@dataclass(frozen=True)
class RunSummary:
    avg_delivery: float
    max_delivery: float
    min_delivery: float
    jain_delivery: float
    avg_delay: float
    max_delay: float
    avg_throughput: float
    jain_throughput: float
    connections: int


def summarize_run(stats) -> RunSummary:
    """One run's connection stats reduced to the summary row; delay is packet-weighted."""
    if not stats:
        nan = math.nan
        return RunSummary(nan, nan, nan, nan, nan, nan, nan, nan, 0)
    d = np.array([s.delivery_time for s in stats], dtype=float)
    thr = np.array([s.throughput for s in stats], dtype=float)
    w = np.array([s.packets for s in stats], dtype=float)
    md = np.array([s.mean_delay for s in stats], dtype=float)
    return RunSummary(
        float(d.mean()), float(d.max()), float(d.min()), jain_index(d),
        float((md * w).sum() / w.sum()), float(max(s.max_delay for s in stats)),
        float(thr.mean()), jain_index(thr) if np.isfinite(thr).all() else math.nan,
        len(stats),
    )


SUMMARY_FIELDS = ("avg_delivery", "max_delivery", "min_delivery", "jain_delivery",
                  "avg_delay", "avg_throughput", "jain_throughput")


def aggregate(runs) -> dict:
    """Cross-run means and sample standard deviations of the per-run summaries.

    ``runs`` holds one list of :class:`ConnectionStats` per run. Returns a dict
    with ``<field>`` and ``stddev_<field>`` keys plus ``runs``. Runs without
    completed connections are skipped.
    """
    if not runs:
        raise ValueError("need at least one run")
    rows = [summarize_run(r) for r in runs if r]
    out = {"runs": len(rows)}
    for f in SUMMARY_FIELDS:
        v = np.array([getattr(r, f) for r in rows], dtype=float)
        out[f] = float(v.mean()) if v.size else math.nan
        out["stddev_" + f] = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return out


def summary_csv(rows) -> str:
    """``rows`` are ``(scheduler, param, aggregate_dict)`` triples."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["scheduler", "param", *SUMMARY_FIELDS, *("stddev_" + f for f in SUMMARY_FIELDS), "runs"]
    w.writerow(header)
    for sched, param, agg in rows:
        w.writerow([sched, param, *(_fmt(agg[k]) for k in header[2:])])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def delay_histogram(packets, mode: str = "end_to_end", bin_width: int = 1):
    """Normalized ``(bin_low, mass)`` pairs over delivered packets.

    ``nodal`` bins every per-hop wait (queueing plus the transmission slot),
    ``end_to_end`` bins total packet delay.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if mode == "end_to_end":
        vals = [p.delivered - p.created for p in packets if p.delivered is not None]
    elif mode == "nodal":
        vals = [w for p in packets if p.delivered is not None for w in p.waits]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not vals:
        return []
    bins = np.asarray(vals, dtype=np.int64) // bin_width
    keys, counts = np.unique(bins, return_counts=True)
    total = counts.sum()
    return [(int(k) * bin_width, c / total) for k, c in zip(keys, counts)]


def histogram_csv(hist) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_low", "mass"])
    w.writerows((b, repr(float(m))) for b, m in hist)
    return buf.getvalue()


def result_stats(result) -> list[ConnectionStats]:
    """Connection stats for the completed connections of a simulation result."""
    return [connection_stats(pk, cid) for cid, pk in sorted(result.completed_connections().items())]


def mean_delay(result) -> float:
    pk = result.delivered_packets()
    if not pk:
        return math.nan
    return float(np.mean([p.delivered - p.created for p in pk]))
