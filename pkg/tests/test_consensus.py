import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localvoting.config import ScenarioConfig
from localvoting.consensus import (ConsensusTrace, averaged_trajectory, disagreement,
                                   has_spanning_tree, laplacian, load_spread,
                                   mean_square_deviation, spectral_report, spectral_summary,
                                   spread, timeseries_csv)
from localvoting.engine import run_frames

K3 = ((0.0, 0.0), (1.0, 0.0), (0.5, 0.8))


def two_node(b=0.5, T=10):
    B = np.tile(np.array([[0, b], [b, 0]]), (T, 1, 1))
    return ConsensusTrace.from_weights(B)


def test_laplacian_examples():
    assert laplacian([[0, 1], [1, 0]]).tolist() == [[1, -1], [-1, 1]]
    assert not laplacian(np.zeros((3, 3))).any()
    A = [[0, 2, 0], [2, 0, 3], [0, 3, 0]]
    assert laplacian(A).tolist() == [[2, -2, 0], [-2, 5, -3], [0, -3, 3]]
    with pytest.raises(ValueError):
        laplacian([[0, -1], [1, 0]])


@given(st.integers(1, 8), st.data())
def test_laplacian_rows_sum_to_zero(n, data):
    A = np.array(data.draw(st.lists(st.lists(st.floats(0, 10), min_size=n, max_size=n),
                                    min_size=n, max_size=n)))
    np.fill_diagonal(A, 0)
    assert np.abs(laplacian(A).sum(axis=1)).max() < 1e-9


def test_two_node_spectrum():
    rep = spectral_report(two_node(), 1.0)
    assert rep.lambda2 == pytest.approx(1.0)
    assert rep.d_max == pytest.approx(0.5)
    assert rep.gamma_bound == pytest.approx(2.0)
    assert rep.gamma_ok and not rep.divergent and rep.spanning_tree
    assert rep.zero_multiplicity == 1
    assert rep.rho_unit == pytest.approx(0.0)
    assert "lambda2: 1.0" in rep.to_text()


def test_empty_exchange_graph():
    rep = spectral_summary(np.zeros((3, 3)), 1.0)
    assert rep.lambda2 == 0 and not rep.spanning_tree
    assert rep.zero_multiplicity == 3


def test_spanning_tree_directed():
    assert has_spanning_tree([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    # two sinks of node 0 but nothing reaches 0 from elsewhere: root 0 still spans
    assert has_spanning_tree([[0, 0, 0], [1, 0, 0], [1, 0, 0]])
    # two isolated sources
    assert not has_spanning_tree([[0, 0, 0], [0, 0, 0], [1, 1, 0]])


def test_worked_example_trace_spans():
    cfg = ScenarioConfig("local_voting", positions=K3, range=1.5, frame_length=50, order="id",
                         traffic="preload", initial_queues=(400, 100, 310),
                         initial_slots=(20, 20, 10), trace=True)
    r = run_frames(cfg, 6)
    tr = ConsensusTrace.from_frames(r.trace)
    rep = spectral_report(tr, 1.0)
    assert rep.spanning_tree and rep.zero_multiplicity == 1
    sp = load_spread(tr)
    assert sp[0] == pytest.approx(26.0)
    assert sp[1] <= 1.0 + 1e-9
    text = timeseries_csv(tr, 1.0)
    assert text.splitlines()[0] == "frame,msd,spread"
    assert len(text.splitlines()) == len(tr) + 1


def test_averaged_no_coupling():
    out = averaged_trajectory(np.zeros((3, 3)), np.eye(3), np.zeros(3), [1, 2, 3], 1.0, 20)
    assert (out == [1, 2, 3]).all()


def test_averaged_two_node_converges():
    B = [[0, 0.5], [0.5, 0]]
    out = averaged_trajectory(B, np.eye(2), np.zeros(2), [2, 0], 0.5, 200)
    assert np.abs(out[200] - [1, 1]).max() < 1e-6
    # disagreement mode decays by |1 - gamma * lambda2| = 0.5 per step
    d = disagreement(out[:5])
    assert d[1:] / d[:-1] == pytest.approx([0.5] * 4)


def test_averaged_two_node_diverges():
    B = [[0, 0.5], [0.5, 0]]
    rep = spectral_summary(B, 2.5)
    assert rep.divergent and not rep.gamma_ok
    d = disagreement(averaged_trajectory(B, np.eye(2), np.zeros(2), [2, 0], 2.5, 30))
    assert (np.diff(d) >= 0).all()


@given(st.floats(0.05, 1.9))
def test_disagreement_non_increasing_under_bound(gamma):
    B = np.array([[0, 0.5, 0.2], [0.5, 0, 0.3], [0.2, 0.3, 0]])
    rep = spectral_summary(B, gamma)
    if rep.divergent:
        return
    d = disagreement(averaged_trajectory(B, np.eye(3), np.zeros(3), [3, 0, -1], gamma, 40))
    assert (np.diff(d) <= 1e-12).all()


def test_msd_examples():
    x = np.arange(12.0).reshape(4, 3)
    assert not mean_square_deviation(x, x).any()
    assert mean_square_deviation(x + 0.5, x) == pytest.approx([3 * 0.25] * 4)
    with pytest.raises(ValueError):
        mean_square_deviation(x, x[:3])
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=(6, 5)), rng.normal(size=(6, 5))
    brute = [sum((a[t, i] - b[t, i]) ** 2 for i in range(5)) for t in range(6)]
    assert mean_square_deviation(a, b) == pytest.approx(brute)


def test_spread_examples():
    assert spread([380, 80, 300], [25, 5, 20]) == pytest.approx(1.0)
    assert spread([0, 0, 0], [1, 2, 3]) == 0
    assert spread([10, 10], [1, 2]) == 5
    with pytest.raises(ValueError):
        load_spread((np.zeros((0, 2)), np.zeros((0, 2))))


def test_report_needs_two_frames():
    with pytest.raises(ValueError):
        spectral_report(two_node(T=1), 1.0)
