"""Reversible all-pairs shortest paths over a register superposition.

Each pivot round runs the relax-and-update circuit on every ``|i⟩|j⟩|d_ij⟩``
term at once: equality flags on the indices, controlled loads of ``d_ik`` and
``d_kj``, an adder whose carry absorbs the infinity sentinel, a borrow-based
comparator, a conditional replacement, and a Bennett-style uncompute that
leaves only ``|i⟩|j⟩|d_ij^(r)⟩``.

The pivot lookups read a per-round shadow table holding the previous round's
distances; it is refreshed from the simulated register values after each round.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import regsim as rs
from .errors import DisconnectedWarning
from .fixedpoint import INF, FpFormat, choose_format, decode_array, encode_array

log = logging.getLogger(__name__)



@dataclass(frozen=True)
class AdjacencyInput:
    """Quantised neighbourhood graph: ``codes[i, j]`` are raw distance words."""

    codes: np.ndarray
    fmt: FpFormat

    def __post_init__(self):
        c = np.asarray(self.codes, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(np.diag(c) != 0):
            raise ValueError("adjacency diagonal must be zero")
        if not np.array_equal(c, c.T):
            raise ValueError("adjacency must be symmetric")
        c.setflags(write=False)
        object.__setattr__(self, "codes", c)

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    def decoded(self) -> np.ndarray:
        return decode_array(self.codes, self.fmt)

    @classmethod
    def from_matrix(cls, weights, fmt: FpFormat | None = None, fraction_bits: int = 12):
        """Quantise a real matrix with ``inf`` marking non-edges."""
        w = np.asarray(weights, dtype=float)
        if fmt is None:
            finite = w[np.isfinite(w)]
            top = finite.max(initial=0.0)
            fmt = choose_format(top if top > 0 else 1.0, w.shape[0], fraction_bits)
        return cls(encode_array(w, fmt), fmt)


def knn_graph(points, k: int = 5) -> np.ndarray:
    """Euclidean k-NN weights, symmetrised by union; ``inf`` where no edge."""
    x = np.asarray(points, dtype=float)
    n = x.shape[0]
    dist = np.sqrt(np.maximum(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1), 0.0))
    k = min(k, n - 1)
    w = np.full((n, n), INF)
    np.fill_diagonal(w, 0.0)
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        nbrs = [j for j in order if j != i][:k]
        for j in nbrs:
            w[i, j] = w[j, i] = dist[i, j]
    return w


def knn_adjacency(points, k: int = 5, fmt: FpFormat | None = None, fraction_bits: int = 12):
    return AdjacencyInput.from_matrix(knn_graph(points, k), fmt=fmt, fraction_bits=fraction_bits)


@dataclass(frozen=True)
class GeodesicState:
    """Register form (distance in a register) and amplitude form of the geodesic matrix."""

    register_form: rs.RegisterState
    amplitude_form: rs.RegisterState | None
    normalizer: float
    success_probability: float
    fmt: FpFormat
    n: int

    def codes(self) -> np.ndarray:
        return state_matrix(self.register_form, self.n)

    def distances(self) -> np.ndarray:
        return decode_array(self.codes(), self.fmt)

    def probabilities(self) -> np.ndarray:
        """Measurement distribution of the amplitude form over ``(i, j)``."""
        p = np.zeros((self.n, self.n))
        s = self.amplitude_form
        p[s.values("i"), s.values("j")] = np.abs(s.amps) ** 2
        return p


def state_matrix(state: rs.RegisterState, n: int, value_reg: str = "d") -> np.ndarray:
    out = np.zeros((n, n), dtype=np.int64)
    out[state.values("i"), state.values("j")] = state.values(value_reg)
    return out


def floyd_layout(n: int, fmt: FpFormat, max_bits: int = rs.DEFAULT_MAX_BITS) -> rs.RegisterLayout:
    w = rs.index_bits(n)
    l = fmt.l
    return rs.RegisterLayout(
        [
            ("i", w), ("j", w), ("d", l), ("dist_copy", l), ("cmp", 1), ("carry", 1),
            ("row_flag", 1), ("head", l), ("col_flag", 1), ("tail", l), ("cand", l), ("out", l),
        ],
        max_bits=max_bits,
    )


PAYLOAD = ("i", "j", "d")
ANCILLAS = ("dist_copy", "cmp", "carry", "row_flag", "head", "col_flag", "tail", "cand", "out")


def initial_state(adj: AdjacencyInput, max_bits: int = rs.DEFAULT_MAX_BITS) -> rs.RegisterState:
    layout = floyd_layout(adj.n, adj.fmt, max_bits)
    return rs.init_uniform(layout, ("i", "j"), adj.codes, value_register="d")


def floyd_iteration(state: rs.RegisterState, k: int, table: np.ndarray) -> rs.RegisterState:
    """One pivot round: ``d_ij <- min(d_ij, d_ik + d_kj)`` on every term.

    ``table`` holds the previous round's distance codes; it feeds the pivot
    loads and the final erasure of the old distance.
    """
    table = np.asarray(table, dtype=np.int64)
    oplog = rs.OpLog()
    s = rs.copy(state, "d", "dist_copy", log=oplog)
    # flag 0 marks i == k; flip so that 0 marks the terms whose pivot row is loaded
    s = rs.equality_flag(s, k, "i", "row_flag", log=oplog)
    s = rs.equality_flag(s, k, "j", "col_flag", log=oplog)
    s = rs.bit_flip(s, "row_flag", log=oplog)
    s = rs.bit_flip(s, "col_flag", log=oplog)
    s = rs.controlled_load(s, "row_flag", "head", table[:, k], "i", fill_ones=True, log=oplog)
    s = rs.controlled_load(s, "col_flag", "tail", table[k, :], "j", fill_ones=True, log=oplog)
    s = rs.add_into(s, "tail", ("carry", "head"), log=oplog)
    s = rs.copy(s, "head", "cand", control=("carry", 0), log=oplog)
    s = rs.bit_flip(s, "cmp", log=oplog)
    s = rs.subtract_compare(s, "dist_copy", ("cmp", "carry", "head"), log=oplog)
    s = rs.conditional_replace(s, "cmp", "dist_copy", "cand", erase_with="d", log=oplog)
    # keep the result, then run everything above backwards
    s = rs.copy(s, "dist_copy", "out")
    s = rs.uncompute(s, oplog, ancillas=("dist_copy", "cmp", "carry", "row_flag", "head", "col_flag", "tail", "cand"),
                     stage="qfloyd")
    s = rs.xor_lookup(s, "d", table, ("i", "j"))
    s = rs.swap(s, "d", "out")
    dirty = [r for r in ANCILLAS if np.any(s.values(r) != 0)]
    if dirty:
        raise rs.DirtyAncilla(f"pivot {k}: registers {dirty} not clean", stage="qfloyd")
    return s


def run_quantum_floyd(adj: AdjacencyInput, max_bits: int = rs.DEFAULT_MAX_BITS,
                      amplitude: bool = True) -> GeodesicState:
    """All ``n`` pivot rounds, then QDAC into ``sqrt(d / sum(d))`` amplitudes."""
    n = adj.n
    state = initial_state(adj, max_bits)
    table = adj.codes.copy()
    for k in range(n):
        state = floyd_iteration(state, k, table)
        table = state_matrix(state, n)
    if np.any(table == adj.fmt.sentinel_max):
        warnings.warn("neighbourhood graph is disconnected; sentinel distances remain",
                      DisconnectedWarning, stacklevel=2)
    reg = rs.RegisterState(
        rs.RegisterLayout([("i", state.layout.width("i")), ("j", state.layout.width("j")),
                           ("d", adj.fmt.l)], max_bits=max_bits),
        state.labels[:, [state.layout.index(r) for r in PAYLOAD]],
        state.amps,
    )
    amp_state, p1, g = None, float("nan"), float("nan")
    if amplitude:
        try:
            amp_state, p1 = rs.qdac_amplitude(reg, "d", mode="sqrt")
            g = float(decode_array(table, adj.fmt).sum())
        except rs.AllZeroValues:
            log.info("all geodesic distances are zero; no amplitude form")
    return GeodesicState(reg, amp_state, g, p1, adj.fmt, n)


def classical_floyd(adj: AdjacencyInput | np.ndarray) -> np.ndarray:
    """Triple-loop Floyd–Warshall on decoded distances (``inf`` for no path)."""
    d = adj.decoded() if isinstance(adj, AdjacencyInput) else np.array(adj, dtype=float)
    n = d.shape[0]
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            for j in range(n):
                if dik + d[k, j] < d[i, j]:
                    d[i, j] = dik + d[k, j]
    return d


def brute_force_paths(weights) -> np.ndarray:
    """Shortest simple-path lengths by enumerating every simple path (tiny N only)."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    best = np.full((n, n), INF)
    np.fill_diagonal(best, 0.0)
    for i, j in itertools.permutations(range(n), 2):
        others = [v for v in range(n) if v not in (i, j)]
        for r in range(len(others) + 1):
            for mids in itertools.permutations(others, r):
                path = (i, *mids, j)
                total = 0.0
                for a, b in zip(path, path[1:]):
                    total += w[a, b]
                    if total >= best[i, j]:
                        break
                else:
                    best[i, j] = total
    return best
