import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localvoting.topology import (Topology, TopologyInfeasible, complete_topology,
                                  generate_random_topology, path_topology)

import oracles
from strategies import small_topologies


def edges_topology(n, edges):
    return Topology.from_edges(n, edges)


def test_two_nodes_in_small_area_are_adjacent():
    t = generate_random_topology(2, 5, 5, 10, seed=1)
    assert t.connected
    assert t.one_hop[0] == {1}


def test_same_seed_same_topology():
    a = generate_random_topology(25, 50, 50, 10, seed=7)
    b = generate_random_topology(25, 50, 50, 10, seed=7)
    assert a.dumps() == b.dumps()
    assert np.array_equal(a.adjacency, b.adjacency)


def test_different_seed_differs():
    a = generate_random_topology(25, 50, 50, 10, seed=7)
    b = generate_random_topology(25, 50, 50, 10, seed=8)
    assert a.dumps() != b.dumps()


def test_sparse_full_size_geometry_is_infeasible():
    # mean degree under 3: connected placements essentially never occur
    with pytest.raises(TopologyInfeasible):
        generate_random_topology(100, 100, 100, 10, seed=1, max_attempts=200)


def test_mean_degree_matches_analytic_oracle():
    from localvoting.topology import _disk_adjacency, random_positions
    rng = np.random.default_rng(11)
    degs = [_disk_adjacency(random_positions(100, 100, 100, rng), 10).sum(axis=1).mean()
            for _ in range(500)]
    expect = oracles.expected_degree_unit_square(100, 10, 100)
    assert abs(np.mean(degs) - expect) / expect < 0.02


@pytest.mark.slow
def test_full_size_connected_at_larger_range():
    t = generate_random_topology(100, 100, 100, 20, seed=42)
    assert t.connected
    assert 5 < t.degrees().mean() < 20


def test_invalid_parameters():
    with pytest.raises(ValueError):
        generate_random_topology(1, 5, 5, 1, seed=0)
    with pytest.raises(ValueError):
        generate_random_topology(3, 0, 5, 1, seed=0)


def test_strict_range():
    t = Topology.from_positions([[0, 0], [1, 0]], 1.0)
    assert not t.adjacency[0, 1]
    t = Topology.from_positions([[0, 0], [1, 0]], 1.0000001)
    assert t.adjacency[0, 1]


@pytest.mark.parametrize("n,i,expect", [(3, 0, {1, 2}), (5, 0, {1, 2}), (5, 2, {0, 1, 3, 4})])
def test_two_hop_on_paths(n, i, expect):
    assert path_topology(n).two_hop_neighborhood(i) == expect


def test_two_hop_complete():
    t = complete_topology(4)
    for i in range(4):
        assert t.two_hop_neighborhood(i) == set(range(4)) - {i}


def test_next_hop_examples():
    assert path_topology(3).shortest_path_next_hop(0, 2) == 1
    assert complete_topology(3).shortest_path_next_hop(0, 2) == 2
    cycle = edges_topology(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert cycle.shortest_path_next_hop(0, 2) == 1
    with pytest.raises(ValueError, match="already at destination"):
        cycle.shortest_path_next_hop(1, 1)


def test_chromatic_bound_examples():
    assert path_topology(3).chromatic_upper_bound() == 3
    assert edges_topology(2, [(0, 1)]).chromatic_upper_bound() == 2
    star = edges_topology(5, [(0, k) for k in range(1, 5)])
    assert star.chromatic_upper_bound() == 5


def test_serialization_roundtrip():
    t = generate_random_topology(12, 30, 30, 10, seed=3)
    text = t.dumps()
    assert text.splitlines()[0].split()[0] == "12"
    back = Topology.loads(text)
    assert back.dumps() == text
    assert np.array_equal(back.adjacency, t.adjacency)


@given(small_topologies(connected=False))
def test_adjacency_symmetric_irreflexive(t):
    A = t.adjacency
    assert (A == A.T).all()
    assert not A.diagonal().any()
    pos = t.positions.tolist()
    assert A.tolist() == oracles.adjacency_from_positions(pos, t.range)


@given(small_topologies(connected=False))
def test_two_hop_matches_bfs_oracle(t):
    adj = t.adjacency.tolist()
    for i in range(t.node_count):
        assert set(t.two_hop[i]) == oracles.two_hop_set(adj, i)
        assert t.one_hop[i] <= t.two_hop[i]


@given(small_topologies())
def test_routes_are_shortest_and_loop_free(t):
    adj = t.adjacency.tolist()
    for dst in range(t.node_count):
        d = oracles.hop_distances(adj, dst)
        for src in range(t.node_count):
            if src == dst:
                continue
            nh = t.shortest_path_next_hop(src, dst)
            assert nh == oracles.next_hop_bruteforce(adj, src, dst)
            assert d[nh] == d[src] - 1


@given(st.integers(0, 2 ** 32 - 1))
def test_generation_deterministic(seed):
    a = generate_random_topology(8, 20, 20, 10, seed=seed)
    b = generate_random_topology(8, 20, 20, 10, seed=seed)
    assert a.dumps() == b.dumps()
