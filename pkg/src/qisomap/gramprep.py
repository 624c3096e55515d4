"""Gram-matrix state preparation from the geodesic states.

Row means are estimated by sampling the geodesic state, stored (negated, in
two's complement) next to each distance, and combined by a reversible
add / shift-right / negate pipeline into ``k(i, j)``.  A final QDAC step
produces the amplitude-encoded ``|K⟩``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import regsim as rs
from .errors import SampleBudgetExceeded
from .fixedpoint import FpFormat, choose_format, decode_array
from .qfloyd import GeodesicState, state_matrix

DEFAULT_SAMPLE_CAP = 10_000_000


@dataclass(frozen=True)
class MeanEstimates:
    row: np.ndarray
    col: np.ndarray
    total: float
    samples: int
    epsilon: float
    delta: float
    exact: bool = False

    def records(self) -> list[dict]:
        return [
            {"i": int(i), "estimate": float(v), "samples": int(self.samples)}
            for i, v in enumerate(self.row)
        ]


@dataclass(frozen=True)
class GramState:
    register_form: rs.RegisterState
    amplitude_form: rs.RegisterState
    normalizer: float
    success_probability: float
    fmt: FpFormat
    n: int

    def matrix(self) -> np.ndarray:
        """Decoded ``k(i, j)`` from the register form."""
        return decode_array(state_matrix(self.register_form, self.n, "k"), self.fmt)

    def amplitude_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        s = self.amplitude_form
        a[s.values("i"), s.values("j")] = s.amps.real
        return a

    @property
    def frobenius(self) -> float:
        return math.sqrt(self.normalizer)


def hoeffding_samples(value_range: float, epsilon: float, delta: float) -> int:
    """Samples needed for ``P(|mean - mu| > eps) <= delta`` with values in a range ``R``."""
    if epsilon <= 0 or not 0 < delta < 1:
        raise ValueError("need epsilon > 0 and 0 < delta < 1")
    if value_range <= 0:
        return 1
    return max(1, math.ceil(value_range ** 2 * math.log(2 / delta) / (2 * epsilon ** 2)))


def hoeffding_epsilon(value_range: float, samples: int, delta: float) -> float:
    return value_range * math.sqrt(math.log(2 / delta) / (2 * samples))


def geodesic_values(geo: GeodesicState, square: bool = True, fill_infinite: bool = True) -> np.ndarray:
    """Decoded distances (squared when ``square``) with sentinels replaced.

    Unreachable pairs get twice the largest finite geodesic so that a run
    forced through a disconnected graph still has finite centring inputs.
    """
    D = geo.distances()
    if fill_infinite and np.any(np.isinf(D)):
        finite = D[np.isfinite(D)]
        D = np.where(np.isinf(D), 2.0 * finite.max(initial=1.0), D)
    return D * D if square else D


def estimate_means(geo: GeodesicState, epsilon: float, delta: float, rng=None, *,
                   square: bool = True, samples: int | None = None,
                   max_samples: int = DEFAULT_SAMPLE_CAP, exact: bool = False,
                   source: str = "register") -> MeanEstimates:
    """Row/column means of the (squared) geodesics.

    ``source="register"`` measures the register form with the first register
    held at ``i``: the outcome ``j`` is uniform and the value register returns
    the distance, so the empirical mean obeys Hoeffding with ``R`` the largest
    value.  ``source="amplitude"`` samples the amplitude form (outcome
    ``(i, j)`` with probability ``d_ij / total``) and reweights each hit by
    ``total / n`` so the row sum
    of ``d_ij * p_ij`` becomes an unbiased mean of the squared distance.

    The grand mean comes from the row means without further sampling; column
    means reuse the row estimates because the geodesic matrix is symmetric.
    """
    vals = geodesic_values(geo, square)
    n = geo.n
    if exact:
        rows = vals.mean(axis=1)
        return MeanEstimates(rows, rows.copy(), float(rows.mean()), 0, 0.0, 0.0, exact=True)
    rng = np.random.default_rng() if rng is None else rng
    if source == "register":
        value_range = float(vals.max(initial=0.0) - min(vals.min(initial=0.0), 0.0))
    elif source == "amplitude":
        if not square:
            raise ValueError("amplitude sampling estimates squared means only")
        value_range = geo.normalizer * float(np.sqrt(vals).max(initial=0.0)) / n
    else:
        raise ValueError(f"unknown source {source!r}")
    if samples is None:
        samples = hoeffding_samples(value_range, epsilon, delta)
        if samples > max_samples:
            raise SampleBudgetExceeded(f"{samples} samples needed, cap is {max_samples}")
    else:
        epsilon = hoeffding_epsilon(value_range, samples, delta) if value_range > 0 else 0.0

    if source == "register":
        rows = np.empty(n)
        uniform = np.full(n, 1.0 / n)
        for i in range(n):
            counts = rng.multinomial(samples, uniform)
            rows[i] = counts @ vals[i] / samples
    else:
        p = geo.probabilities().ravel()
        counts = rng.multinomial(samples, p / p.sum()).reshape(n, n)
        dist = np.sqrt(vals)
        rows = (geo.normalizer / n) * (counts * dist).sum(axis=1) / samples
    return MeanEstimates(rows, rows.copy(), float(rows.mean()), int(samples), float(epsilon), float(delta))


def gram_format(max_value: float, n: int, fraction_bits: int) -> FpFormat:
    """Signed format with one spare fraction bit so the halving step is exact."""
    base = choose_format(max(max_value, 2.0 ** -fraction_bits), n, fraction_bits + 1)
    return FpFormat(base.l, base.f, sentinel=False)


def _grid(values, fraction_bits: int) -> np.ndarray:
    """Quantise to ``2**-f`` (half-even) and express with ``f + 1`` fraction bits."""
    q = np.rint(np.asarray(values, dtype=float) * (1 << fraction_bits)).astype(np.int64)
    return 2 * q


GRAM_WORK = ("row_mean", "col_mean", "grand_mean", "one")


def gram_layout(n: int, fmt: FpFormat, max_bits: int = rs.DEFAULT_MAX_BITS) -> rs.RegisterLayout:
    w = rs.index_bits(n)
    l = fmt.l
    return rs.RegisterLayout(
        [("i", w), ("j", w), ("k", l), ("row_mean", l), ("col_mean", l), ("grand_mean", l), ("one", l)],
        max_bits=max_bits,
    )


def build_gram_register(geo: GeodesicState, means: MeanEstimates, square: bool = True,
                        max_bits: int = rs.DEFAULT_MAX_BITS,
                        keep_work: bool = False) -> tuple[rs.RegisterState, FpFormat]:
    """Run the add / shift / negate pipeline on every ``|i⟩|j⟩|d_ij⟩`` term.

    Returns the state over ``|i⟩|j⟩|k(i,j)⟩`` and the signed format of ``k``.
    ``keep_work`` returns the full layout with the (cleared) work registers.
    """
    f = geo.fmt.f
    vals = geodesic_values(geo, square)
    top = max(float(np.abs(vals).max(initial=0.0)),
              float(np.abs(means.row).max(initial=0.0)), abs(means.total))
    fmt = gram_format(top, geo.n, f)
    mask = fmt.mask

    # Re-encode the value register; with squaring on this is the squaring lookup.
    value_codes = _grid(vals, f) & mask
    reg = geo.register_form
    layout = gram_layout(geo.n, fmt, max_bits)
    zeros = np.zeros(len(reg), dtype=np.int64)
    i_idx, j_idx = reg.values("i"), reg.values("j")
    s = reg.relabel(layout, {"i": i_idx, "j": j_idx, "k": value_codes[i_idx, j_idx],
                             "row_mean": zeros, "col_mean": zeros, "grand_mean": zeros, "one": zeros})

    neg_row = (-_grid(means.row, f)) & mask
    neg_col = (-_grid(means.col, f)) & mask
    total = np.array([int(_grid(means.total, f)) & mask])
    oplog = rs.OpLog()
    s = rs.xor_lookup(s, "row_mean", neg_row, ("i",), log=oplog)
    s = rs.xor_lookup(s, "col_mean", neg_col, ("j",), log=oplog)
    s = rs.xor_lookup(s, "grand_mean", np.broadcast_to(total, (geo.n,)), ("i",), log=oplog)
    for src in ("row_mean", "col_mean", "grand_mean"):
        s = rs.add_into(s, src, ("k",))
    s = rs.shift_right(s, "k", arithmetic=True)
    s = rs.bit_flip(s, "one", mask=1, log=oplog)
    s = rs.bit_flip(s, "k")
    s = rs.add_into(s, "one", ("k",))
    s = rs.uncompute(s, oplog, ancillas=GRAM_WORK, stage="gramprep")
    if keep_work:
        return s, fmt
    out_layout = rs.RegisterLayout([("i", layout.width("i")), ("j", layout.width("j")), ("k", fmt.l)],
                                   max_bits=max_bits)
    out = rs.RegisterState(out_layout, s.labels[:, :3], s.amps)
    return out, fmt


def build_gram_amplitude(reg: rs.RegisterState, fmt: FpFormat, n: int) -> GramState:
    """QDAC in linear mode: amplitudes ``k(i,j) / ‖K‖_F``."""
    amp, p2 = rs.qdac_amplitude(reg, "k", mode="linear")
    k = rs.register_signed(reg, "k") / fmt.scale
    sq_norm = float(np.sum(k * k))
    return GramState(reg, amp, sq_norm, p2, fmt, n)
