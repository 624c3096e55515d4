import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from qisomap import qfloyd


def reference_geodesics(weights):
    """Independent shortest paths (scipy Dijkstra) on an ``inf``-for-no-edge matrix."""
    w = np.asarray(weights, dtype=float)
    dense = np.where(np.isinf(w), 0.0, w)
    # scipy treats 0 as "no edge"; a true zero-weight edge would be lost, so tests avoid them
    return shortest_path(dense, method="D", directed=False)


def random_knn_adjacency(rng, n, k=3, dim=2, fraction_bits=8):
    pts = rng.normal(size=(n, dim))
    return qfloyd.AdjacencyInput.from_matrix(qfloyd.knn_graph(pts, k), fraction_bits=fraction_bits)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    A = rng.normal(size=(n, rank))
    return A @ A.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
