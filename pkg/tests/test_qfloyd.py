import math
import warnings

import numpy as np
import pytest

from qisomap import qfloyd
from qisomap import regsim as rs
from qisomap.errors import DisconnectedWarning
from qisomap.fixedpoint import FpFormat, encode_array

from conftest import random_knn_adjacency, reference_geodesics

INF = math.inf
FMT = FpFormat(10, 2)


def adj(weights, fmt=FMT):
    return qfloyd.AdjacencyInput.from_matrix(np.array(weights, dtype=float), fmt=fmt)


PATH = [[0, 1, INF], [1, 0, 1], [INF, 1, 0]]
TRIANGLE = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
STAR = [[0, 1, 1, 1], [1, 0, INF, INF], [1, INF, 0, INF], [1, INF, INF, 0]]


def test_adjacency_validation():
    with pytest.raises(ValueError):
        qfloyd.AdjacencyInput(np.array([[0, 1], [2, 0]]), FMT)
    with pytest.raises(ValueError):
        qfloyd.AdjacencyInput(np.array([[1, 1], [1, 0]]), FMT)


def test_pivot_iteration_relaxes_path():
    a = adj(PATH)
    s = qfloyd.initial_state(a)
    table = a.codes.copy()
    s = qfloyd.floyd_iteration(s, 0, table)
    table = qfloyd.state_matrix(s, 3)
    assert table[0, 2] == FMT.sentinel_max
    s = qfloyd.floyd_iteration(s, 1, table)
    assert qfloyd.state_matrix(s, 3)[0, 2] == encode_array(2.0, FMT)


def test_metric_complete_graph_unchanged_every_pivot():
    # dyadic points on a line: the quantised complete graph is exactly metric
    x = np.array([0.0, 0.5, 1.75, 3.0, 4.25])
    a = adj(np.abs(x[:, None] - x[None, :]))
    s = qfloyd.initial_state(a)
    for k in range(5):
        s = qfloyd.floyd_iteration(s, k, a.codes)
        assert np.array_equal(qfloyd.state_matrix(s, 5), a.codes)


def test_exactly_metric_graph_unchanged():
    # points on a line with dyadic coordinates: the triangle inequality holds with slack >= 0
    x = np.array([0.0, 0.5, 1.75, 3.0])
    W = np.abs(x[:, None] - x[None, :])
    W[0, 3] = W[3, 0] = 2.5  # shortcut, still metric
    a = adj(W)
    s = qfloyd.initial_state(a)
    expected = encode_array(qfloyd.classical_floyd(a), FMT)
    for k in range(4):
        s = qfloyd.floyd_iteration(s, k, qfloyd.state_matrix(s, 4))
    assert np.array_equal(qfloyd.state_matrix(s, 4), expected)


def test_single_point_identity():
    a = adj([[0.0]])
    geo = qfloyd.run_quantum_floyd(a)
    assert geo.codes().tolist() == [[0]]
    assert qfloyd.classical_floyd(a).tolist() == [[0.0]]


@pytest.mark.parametrize("weights,pair,expected", [
    (TRIANGLE, (0, 2), 2.0),
    (STAR, (1, 2), 2.0),
    ([[0, 1.75], [1.75, 0]], (0, 1), 1.75),
])
def test_quantum_floyd_examples(weights, pair, expected):
    a = adj(weights)
    geo = qfloyd.run_quantum_floyd(a)
    assert geo.distances()[pair] == expected
    ref = reference_geodesics(weights)
    assert np.array_equal(geo.distances(), ref)
    assert np.array_equal(geo.codes(), encode_array(qfloyd.classical_floyd(a), FMT))


def test_star_all_leaf_pairs():
    d = qfloyd.run_quantum_floyd(adj(STAR)).distances()
    for i in range(1, 4):
        for j in range(1, 4):
            if i != j:
                assert d[i, j] == 2.0


def test_classical_floyd_matches_brute_force(rng):
    for _ in range(5):
        n = int(rng.integers(2, 8))
        a = random_knn_adjacency(rng, n, k=2)
        d = a.decoded()
        assert np.array_equal(qfloyd.classical_floyd(a), qfloyd.brute_force_paths(d))


def test_oracle_equivalence_and_invariants(rng):
    for _ in range(12):
        n = int(rng.integers(2, 12))
        a = random_knn_adjacency(rng, n, k=3)
        s = qfloyd.initial_state(a)
        table = a.codes.copy()
        for k in range(n):
            s = qfloyd.floyd_iteration(s, k, table)
            new = qfloyd.state_matrix(s, n)
            assert np.all(new <= table)  # monotone under unsigned order (sentinel is largest)
            assert rs.dirty_weight(s, qfloyd.ANCILLAS) < 1e-12
            assert len(s) == n * n
            assert np.allclose(np.abs(s.amps), 1 / n)
            table = new
        assert np.array_equal(table, table.T)
        assert np.array_equal(table, encode_array(qfloyd.classical_floyd(a), a.fmt))


def test_amplitude_law(rng):
    a = random_knn_adjacency(rng, 7, k=3)
    geo = qfloyd.run_quantum_floyd(a)
    D = geo.distances()
    G = D.sum()
    assert geo.normalizer == pytest.approx(G)
    amp = np.zeros((7, 7))
    s = geo.amplitude_form
    amp[s.values("i"), s.values("j")] = s.amps.real
    assert np.allclose(amp, np.sqrt(D / G), atol=1e-12)
    assert abs(s.norm2() - 1) < 1e-12
    # success probability of the sqrt-mode transfer on a uniform input
    assert geo.success_probability == pytest.approx(D.mean() / D.max())


def test_register_form_layout_is_payload_only(rng):
    geo = qfloyd.run_quantum_floyd(random_knn_adjacency(rng, 4, k=2))
    assert geo.register_form.layout.names == ("i", "j", "d")
    assert len(geo.register_form) == 16


def test_disconnected_warns():
    W = [[0, 1, INF], [1, 0, INF], [INF, INF, 0]]
    with pytest.warns(DisconnectedWarning):
        geo = qfloyd.run_quantum_floyd(adj(W))
    assert geo.distances()[0, 2] == INF


def test_knn_graph_union_symmetrisation():
    pts = np.array([[0.0], [1.0], [1.5], [10.0]])
    W = qfloyd.knn_graph(pts, k=1)
    assert np.array_equal(W, W.T)
    # 3's nearest neighbour is 2; union keeps that edge although 2's nearest is 1
    assert W[2, 3] == 8.5 and W[1, 2] == 0.5 and W[0, 1] == 1.0
    assert np.isinf(W[0, 3])


def test_knn_graph_clamps_k():
    W = qfloyd.knn_graph(np.eye(3), k=10)
    assert np.all(np.isfinite(W))
