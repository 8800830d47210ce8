import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localvoting.schedule import (UNBOUNDED_LOAD, ConflictError, Schedule, balance_violations,
                                  exchangeable_neighbors, is_conflict_free, is_maximal,
                                  node_load, semi_inverse_load, write_schedule_csv)
from localvoting.topology import Topology, complete_topology, path_topology

import oracles
from strategies import random_schedules, small_topologies


def raw(topo, S, owners):
    """Schedule built without mutator checks; ``owners`` maps slot -> nodes."""
    sched = Schedule(topo, S)
    for s, nodes in owners.items():
        for i in nodes:
            sched.X[i, s] = 1
    return sched


def test_conflict_examples():
    assert not is_conflict_free(raw(path_topology(3), 1, {0: [0, 2]}), path_topology(3))
    assert is_conflict_free(raw(path_topology(5), 1, {0: [0, 3]}), path_topology(5))
    assert is_conflict_free(Schedule(path_topology(5), 4), path_topology(5))


@pytest.mark.parametrize("q,p,x", [(400, 20, 20), (310, 10, 31), (0, 0, 0), (0, 5, 0),
                                   (5, 2, 3), (7, 2, 4), (3, 2, 2)])
def test_node_load(q, p, x):
    assert node_load(q, p) == x


def test_node_load_sentinel():
    assert node_load(1, 0) == UNBOUNDED_LOAD
    assert node_load(1, 0) > node_load(10 ** 9, 1)


def test_node_load_exhaustive_oracle():
    from fractions import Fraction
    import math
    for q in range(1, 1001, 7):
        for p in range(1, 1001, 3):
            assert node_load(q, p) == math.floor(Fraction(q, p) + Fraction(1, 2))


def test_semi_inverse():
    assert semi_inverse_load(25, 380) == pytest.approx(25 / 380, abs=1e-15)
    assert abs(1 / semi_inverse_load(25, 380) - 15.2) < 1e-9
    assert semi_inverse_load(0, 7) == 0
    assert semi_inverse_load(3, 0) == 3


def test_exchangeable_examples():
    t3 = path_topology(3)
    assert exchangeable_neighbors(raw(t3, 4, {3: [1]}), t3, 0) == {1}
    assert exchangeable_neighbors(raw(t3, 4, {3: [2]}), t3, 0) == set()
    t5 = path_topology(5)
    assert exchangeable_neighbors(raw(t5, 1, {0: [1, 4]}), t5, 2) == set()


def test_maximal_examples():
    t3 = path_topology(3)
    assert is_maximal(raw(t3, 1, {0: [1]}), t3, [1, 1, 1])
    assert not is_maximal(Schedule(t3, 1), t3, [0, 1, 0])
    t5 = path_topology(5)
    assert not is_maximal(raw(t5, 1, {0: [1]}), t5, [0, 0, 0, 0, 1])


def test_balance_examples():
    k2 = complete_topology(2)
    sched = raw(k2, 10, {0: [0], **{s: [1] for s in range(1, 10)}})
    assert balance_violations(sched, k2, [100, 10]) == [(0, 1)]
    eq = raw(k2, 4, {0: [0], 1: [0], 2: [1], 3: [1]})
    assert balance_violations(eq, k2, [10, 10]) == []
    # node 0 is the most loaded but no neighbor can hand it a slot
    far = Topology.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    blocked = raw(far, 2, {0: [0, 3], 1: [2]})
    assert balance_violations(blocked, far, [50, 0, 1, 1]) == []


def test_mutators_reject_conflicts():
    t = path_topology(3)
    s = Schedule(t, 2)
    s.grant(0, 0)
    with pytest.raises(ConflictError):
        s.grant(2, 0)
    with pytest.raises(ConflictError):
        s.grant(1, 0)
    s.grant(1, 1)
    s.transfer(1, 1, 2)
    assert s.owned(2) == (1,)
    with pytest.raises(ValueError):
        s.release(1, 1)


def test_schedule_csv():
    t = path_topology(3)
    s = raw(t, 2, {0: [0], 1: [1]})
    text = write_schedule_csv([(0, s)])
    assert text == "frame,slot,node\n0,0,0\n0,1,1\n"


@given(small_topologies(connected=False), st.data())
def test_random_mutations_stay_conflict_free(t, data):
    S = data.draw(st.integers(1, 6))
    sched = Schedule(t, S)
    adj = t.adjacency.tolist()
    for _ in range(data.draw(st.integers(0, 40))):
        op = data.draw(st.sampled_from(["grant", "release", "transfer"]))
        i = data.draw(st.integers(0, t.node_count - 1))
        s = data.draw(st.integers(0, S - 1))
        try:
            if op == "grant":
                sched.grant(i, s)
            elif op == "release":
                sched.release(i, s)
            else:
                j = data.draw(st.integers(0, t.node_count - 1))
                sched.transfer(s, j, i)
        except (ConflictError, ValueError):
            pass
        for slot in range(S):
            assert oracles.pairwise_conflict_free(adj, sched.owners(slot))
        for k in range(t.node_count):
            assert all(k in sched.owners(x) for x in sched.owned(k))
        assert (sched.slot_counts() == [len(sched.owned(k)) for k in range(t.node_count)]).all()


@given(small_topologies(connected=False), st.data())
def test_exchangeable_transfers_are_feasible(t, data):
    sched = data.draw(random_schedules(t))
    adj = t.adjacency.tolist()
    for i in range(t.node_count):
        ex = exchangeable_neighbors(sched, t, i)
        assert ex <= t.one_hop[i]
        # brute force: j qualifies iff some slot of j can move to i conflict-free
        brute = set()
        for j in t.one_hop[i]:
            for s in sched.owned(j):
                others = set(sched.owners(s)) - {j}
                if i not in others and all(not oracles.conflicting(adj, i, o) for o in others):
                    brute.add(j)
        assert ex == brute
        for j in ex:
            trial = sched.copy()
            s = next(s for s in trial.owned(j) if trial.can_take(i, s, giver=j))
            trial.transfer(s, j, i)
            assert is_conflict_free(trial, t)
