"""Two's-complement fixed-point words for register storage.

A format is ``l`` total bits with ``f`` fraction bits.  Distance formats
reserve the all-ones word as a finite stand-in for an infinite distance; it
compares greater than every finite nonnegative code under unsigned order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INF = math.inf

MAX_BITS = 62


@dataclass(frozen=True)
class FpFormat:
    """Fixed-point layout ``(total_bits, fraction_bits)``.

    With ``sentinel=False`` the all-ones word is an ordinary value (-2**-f);
    that is how signed Gram entries are stored.
    """

    total_bits: int
    fraction_bits: int
    sentinel: bool = True

    def __post_init__(self):
        if not (0 <= self.fraction_bits < self.total_bits <= MAX_BITS):
            raise ValueError(
                f"need 0 <= f < l <= {MAX_BITS}, got l={self.total_bits}, f={self.fraction_bits}"
            )

    @property
    def l(self) -> int:
        return self.total_bits

    @property
    def f(self) -> int:
        return self.fraction_bits

    @property
    def mask(self) -> int:
        return (1 << self.total_bits) - 1

    @property
    def sentinel_max(self) -> int:
        return self.mask

    @property
    def scale(self) -> float:
        return float(1 << self.fraction_bits)

    @property
    def limit(self) -> float:
        """Exclusive bound on the magnitude of representable finite values."""
        return float(2 ** (self.total_bits - 1 - self.fraction_bits))

    def to_dict(self) -> dict:
        return {"l": self.total_bits, "f": self.fraction_bits}

    @classmethod
    def from_dict(cls, d: dict, sentinel: bool = True) -> "FpFormat":
        return cls(int(d["l"]), int(d["f"]), sentinel)


@dataclass(frozen=True)
class FpCode:
    raw: int
    format: FpFormat

    def __post_init__(self):
        if not 0 <= self.raw <= self.format.mask:
            raise ValueError(f"raw code {self.raw} does not fit in {self.format.l} bits")


def _quantize(v: float, fmt: FpFormat) -> int:
    # Python's round() on floats is round-half-to-even.
    q = round(v * fmt.scale)
    if abs(v) >= fmt.limit or not -(1 << (fmt.l - 1)) <= q < (1 << (fmt.l - 1)):
        raise OverflowError(f"{v!r} is outside the range of {fmt}")
    raw = q & fmt.mask
    if fmt.sentinel and raw == fmt.sentinel_max:
        raise OverflowError(f"{v!r} would collide with the infinity sentinel of {fmt}")
    return raw


def encode(v: float, fmt: FpFormat) -> FpCode:
    if math.isinf(v) and v > 0:
        if not fmt.sentinel:
            raise OverflowError(f"{fmt} has no infinity sentinel")
        return FpCode(fmt.sentinel_max, fmt)
    if math.isnan(v):
        raise OverflowError("cannot encode NaN")
    return FpCode(_quantize(float(v), fmt), fmt)


def signed_value(raw: int, bits: int) -> int:
    """Two's-complement interpretation of an unsigned ``bits``-wide word."""
    raw &= (1 << bits) - 1
    return raw - (1 << bits) if raw >> (bits - 1) else raw


def decode(c: FpCode) -> float:
    fmt = c.format
    if fmt.sentinel and c.raw == fmt.sentinel_max:
        return INF
    return signed_value(c.raw, fmt.l) / fmt.scale


def encode_array(values, fmt: FpFormat) -> np.ndarray:
    """Vectorised :func:`encode`; returns unsigned raw codes as int64."""
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape, dtype=np.int64)
    flat = out.reshape(-1)
    for n, v in enumerate(values.reshape(-1)):
        flat[n] = encode(float(v), fmt).raw
    return out


def decode_array(raw, fmt: FpFormat) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.int64) & fmt.mask
    signed = np.where(raw >> (fmt.l - 1) != 0, raw - (1 << fmt.l), raw)
    out = signed.astype(float) / fmt.scale
    if fmt.sentinel:
        out = np.where(raw == fmt.sentinel_max, INF, out)
    return out


def required_bits(max_distance: float, n: int, precision_bits: int) -> int:
    """Smallest ``l`` allowed by the pipeline's overflow bound."""
    if max_distance <= 0:
        raise ValueError("max_distance must be positive")
    span = max(math.ceil(math.log2(4 * max(n, 1) * max_distance)), 0)
    return precision_bits + span + 2


def choose_format(max_distance: float, n: int, precision_bits: int) -> FpFormat:
    """Format wide enough that path sums and the four-term centring sum stay finite."""
    l = required_bits(max_distance, n, precision_bits)
    if l > MAX_BITS:
        raise OverflowError(f"{l} bits needed, more than the {MAX_BITS}-bit word limit")
    return FpFormat(l, precision_bits)
