import math

import pytest
from hypothesis import assume, given, strategies as st

from qisomap.fixedpoint import (
    FpCode,
    FpFormat,
    choose_format,
    decode,
    decode_array,
    encode,
    encode_array,
    required_bits,
)


def test_encode_zero():
    assert encode(0.0, FpFormat(8, 2)).raw == 0


def test_encode_negative_two_is_twos_complement():
    assert encode(-2.0, FpFormat(4, 0)).raw == 0b1110


def test_encode_one_and_a_half():
    fmt = FpFormat(8, 2)
    c = encode(1.5, fmt)
    assert c.raw == 0b00000110
    assert decode(c) == 1.5


def test_decode_examples():
    assert decode(FpCode(0, FpFormat(6, 2))) == 0.0
    assert decode(FpCode(0b1110, FpFormat(4, 0))) == -2.0
    fmt = FpFormat(6, 2)
    assert decode(FpCode(fmt.sentinel_max, fmt)) == math.inf
    assert fmt.sentinel_max == 2 ** 6 - 1


def test_infinity_maps_to_sentinel():
    fmt = FpFormat(10, 3)
    assert encode(math.inf, fmt).raw == fmt.sentinel_max


def test_overflow_raises():
    fmt = FpFormat(6, 2)  # |v| < 2**3
    with pytest.raises(OverflowError):
        encode(8.0, fmt)
    with pytest.raises(OverflowError):
        encode(-8.0, fmt)
    encode(7.5, fmt)


def test_value_colliding_with_sentinel_is_rejected():
    with pytest.raises(OverflowError):
        encode(-1.0, FpFormat(4, 0))
    # without a sentinel the all-ones word is a plain -2**-f
    assert decode(encode(-1.0, FpFormat(4, 0, sentinel=False))) == -1.0


def test_round_half_even():
    fmt = FpFormat(8, 0)
    assert encode(2.5, fmt).raw == 2
    assert encode(3.5, fmt).raw == 4


def test_format_validation():
    with pytest.raises(ValueError):
        FpFormat(4, 4)
    with pytest.raises(ValueError):
        FpFormat(63, 2)
    FpFormat(62, 61)


def test_choose_format_examples():
    assert required_bits(1.0, 4, 4) == 10
    assert choose_format(1.0, 4, 4).l >= 10
    assert required_bits(0.5, 2, 0) == 4
    fmt = choose_format(0.5, 2, 0)
    assert fmt.l >= 4 and fmt.f == 0


def test_choose_format_rejects_nonpositive():
    with pytest.raises(ValueError):
        choose_format(0.0, 3, 4)


def test_format_dict_round_trip():
    fmt = FpFormat(20, 7)
    assert fmt.to_dict() == {"l": 20, "f": 7}
    assert FpFormat.from_dict(fmt.to_dict()) == fmt


formats = st.tuples(st.integers(2, 40), st.integers(0, 20)).filter(lambda lf: lf[1] < lf[0] - 1).map(
    lambda lf: FpFormat(*lf)
)


@st.composite
def fmt_and_value(draw):
    fmt = draw(formats)
    # keep away from the top code, which may round into the sentinel or overflow
    bound = fmt.limit - 2.0 ** -fmt.f
    v = draw(st.floats(-bound + 2.0 ** -fmt.f, bound, allow_nan=False))
    return fmt, v


@given(fmt_and_value())
def test_round_trip_error_bound(fv):
    fmt, v = fv
    # -2**-f shares the all-ones word with the sentinel
    assume(round(v * fmt.scale) != -1)
    assert abs(decode(encode(v, fmt)) - v) <= 2.0 ** (-fmt.f - 1)


@given(fmt_and_value(), fmt_and_value())
def test_monotone(a, b):
    fmt, v1 = a
    v2 = b[1]
    lo, hi = sorted((v1, v2))
    assume(round(lo * fmt.scale) != -1 and round(hi * fmt.scale) != -1)
    if abs(hi) >= fmt.limit - 2.0 ** -fmt.f or abs(lo) >= fmt.limit - 2.0 ** -fmt.f:
        return
    assert decode(encode(lo, fmt)) <= decode(encode(hi, fmt))


@given(st.floats(1e-3, 1e3), st.integers(1, 64), st.integers(0, 16))
def test_sentinel_dominates_every_finite_path_sum(max_d, n, f):
    fmt = choose_format(max_d, n, f)
    # the longest simple path plus one edge
    worst = encode(min(2 * n * max_d, fmt.limit - 1), fmt).raw
    assert fmt.sentinel_max > worst
    assert 2 * n * max_d < fmt.limit


def test_array_helpers_match_scalar():
    fmt = FpFormat(12, 4)
    vals = [[0.0, 1.25, math.inf], [-3.5, 2.0625, 7.0]]
    raw = encode_array(vals, fmt)
    back = decode_array(raw, fmt)
    for r, row in enumerate(vals):
        for c, v in enumerate(row):
            assert raw[r, c] == encode(v, fmt).raw
            assert back[r, c] == decode(encode(v, fmt))
