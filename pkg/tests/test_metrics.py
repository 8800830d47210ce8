from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localvoting.metrics import (ConnectionStats, aggregate, connection_stats, delay_histogram,
                                 histogram_csv, jain_index, summarize_run, summary_csv)
from localvoting.traffic import Packet

import oracles


def pkt(created, delivered, conn=0, seq=0, waits=()):
    p = Packet(conn, seq, 0, 1, created, delivered)
    p.waits = list(waits)
    return p


def test_single_packet_connection():
    s = connection_stats([pkt(0, 7)])
    assert (s.delivery_time, s.mean_delay, s.max_delay) == (7, 7.0, 7)
    assert s.throughput == pytest.approx(1 / 7)


def test_two_packet_connection():
    s = connection_stats([pkt(0, 10), pkt(5, 12, seq=1)])
    assert s.delivery_time == 12
    assert s.mean_delay == pytest.approx(8.5) and s.max_delay == 10
    assert s.throughput == pytest.approx(2 / 12)


def test_undelivered_is_an_error():
    with pytest.raises(ValueError):
        connection_stats([pkt(0, None)])
    with pytest.raises(ValueError):
        connection_stats([pkt(0, 3), pkt(1, None)])


@pytest.mark.parametrize("xs,expect", [([5, 5, 5, 5], 1.0), ([100, 200, 300], 6 / 7),
                                       ([1, 0, 0, 0], 0.25)])
def test_jain_examples(xs, expect):
    assert jain_index(xs) == pytest.approx(expect, abs=1e-12)
    assert jain_index(xs) == pytest.approx(float(oracles.jain_oracle(xs)), abs=1e-12)


def test_jain_rejects_degenerate():
    for xs in ([], [0, 0], [1, -1]):
        with pytest.raises(ValueError):
            jain_index(xs)


positive = st.lists(st.integers(1, 10 ** 6), min_size=1, max_size=30)


@given(positive, st.randoms())
def test_jain_bounds_and_permutation(xs, rnd):
    j = jain_index(xs)
    assert 1 / len(xs) - 1e-12 <= j <= 1 + 1e-12
    ys = xs[:]
    rnd.shuffle(ys)
    assert jain_index(ys) == pytest.approx(j, rel=1e-12)
    assert j == pytest.approx(float(oracles.jain_oracle(xs)), rel=1e-9)


@given(positive, st.integers(1, 1000))
def test_jain_scale_invariant(xs, c):
    assert jain_index([c * x for x in xs]) == pytest.approx(jain_index(xs), rel=1e-12)


def test_single_run_single_connection():
    s = connection_stats([pkt(0, 7)], 3)
    agg = aggregate([[s]])
    assert agg["runs"] == 1
    assert agg["avg_delivery"] == agg["max_delivery"] == 7
    assert agg["jain_delivery"] == 1.0 and agg["stddev_avg_delivery"] == 0.0


def test_identical_runs_zero_spread():
    s = [ConnectionStats(0, 2, 10, 4.0, 6, 0.2), ConnectionStats(1, 4, 30, 8.0, 12, 4 / 30)]
    agg = aggregate([s, s])
    assert agg["runs"] == 2
    assert all(agg[k] == 0 for k in agg if k.startswith("stddev_"))


def test_three_connection_fixture():
    stats = [ConnectionStats(0, 1, 10, 10.0, 10, 0.1), ConnectionStats(1, 3, 20, 5.0, 9, 0.15),
             ConnectionStats(2, 2, 30, 8.0, 12, 2 / 30)]
    r = summarize_run(stats)
    assert r.avg_delivery == 20 and r.max_delivery == 30 and r.min_delivery == 10
    assert r.jain_delivery == pytest.approx(float(Fraction(60 ** 2, 3 * 1400)))
    # packet-weighted delay: (10*1 + 5*3 + 8*2) / 6
    assert r.avg_delay == pytest.approx(41 / 6)
    assert r.max_delay == 12
    other = [ConnectionStats(0, 1, 40, 1.0, 1, 0.025)]
    agg = aggregate([stats, other])
    assert agg["avg_delivery"] == pytest.approx(30)
    assert agg["stddev_avg_delivery"] == pytest.approx(np.std([20, 40], ddof=1))


def test_summary_csv_header():
    text = summary_csv([("lqf", 5, aggregate([[ConnectionStats(0, 1, 7, 7.0, 7, 1 / 7)]]))])
    head, row = text.splitlines()
    assert head.startswith("scheduler,param,avg_delivery,max_delivery")
    assert head.endswith(",runs")
    assert row.startswith("lqf,5,7.0,7.0") and row.endswith(",1")


def test_histograms():
    assert delay_histogram([pkt(0, 4), pkt(1, 5)]) == [(4, 1.0)]
    h = delay_histogram([pkt(0, 1), pkt(3, 4), pkt(0, 2)])
    assert [b for b, _ in h] == [1, 2]
    assert [m for _, m in h] == pytest.approx([2 / 3, 1 / 3])
    assert delay_histogram([]) == []
    nod = delay_histogram([pkt(0, 5, waits=[2, 3]), pkt(0, 2, waits=[2])], mode="nodal")
    assert nod == [(2, pytest.approx(2 / 3)), (3, pytest.approx(1 / 3))]
    assert histogram_csv(h).splitlines()[0] == "bin_low,mass"
    with pytest.raises(ValueError):
        delay_histogram([], mode="other")


@given(st.lists(st.integers(1, 500), min_size=1, max_size=40), st.integers(1, 20))
def test_histogram_mass_sums_to_one(delays, width):
    h = delay_histogram([pkt(0, d) for d in delays], bin_width=width)
    assert sum(m for _, m in h) == pytest.approx(1.0)
    assert all(b % width == 0 for b, _ in h)
