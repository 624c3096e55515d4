"""Sparse basis-label simulation of multi-register states.

Every circuit the algorithm needs is a classical reversible function on basis
labels followed, at most, by an amplitude reweighting.  A state is therefore
stored as a table of integer labels (one column per register) next to a vector
of complex amplitudes; the reversible primitives below permute labels and never
touch amplitudes, so no dense ``2**n`` vector is ever formed.

Register values are unsigned words.  Multi-register "composite" words are read
with the first named register as the most significant part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AllZeroValues,
    DirtyAncilla,
    FlagNotClean,
    LayoutMismatch,
    OddValue,
    TargetNotClean,
)

PRUNE = 1e-15
NORM_TOL = 1e-12
DEFAULT_MAX_BITS = 256
MAX_WORD_BITS = 62


def index_bits(n: int) -> int:
    """Width of an index register addressing ``n`` items (at least one qubit)."""
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


class RegisterLayout:
    """Ordered, uniquely named registers with bit widths."""

    def __init__(self, registers: Iterable[tuple[str, int]], max_bits: int = DEFAULT_MAX_BITS):
        regs = [(str(name), int(width)) for name, width in registers]
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise LayoutMismatch(f"duplicate register names in {names}")
        for name, width in regs:
            if not 1 <= width <= MAX_WORD_BITS:
                raise LayoutMismatch(f"register {name!r} width {width} outside 1..{MAX_WORD_BITS}")
        total = sum(w for _, w in regs)
        if total > max_bits:
            raise LayoutMismatch(f"layout needs {total} label bits, cap is {max_bits}")
        self.registers = tuple(regs)
        self.max_bits = max_bits
        self._pos = {name: n for n, name in enumerate(names)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    @property
    def total_bits(self) -> int:
        return sum(w for _, w in self.registers)

    def index(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise LayoutMismatch(f"no register named {name!r}") from None

    def width(self, name: str) -> int:
        return self.registers[self.index(name)][1]

    def composite_width(self, names: Sequence[str]) -> int:
        return sum(self.width(n) for n in names)

    def __len__(self):
        return len(self.registers)

    def __eq__(self, other):
        return isinstance(other, RegisterLayout) and self.registers == other.registers

    def __hash__(self):
        return hash(self.registers)

    def __repr__(self):
        return f"RegisterLayout({list(self.registers)})"


class RegisterState:
    """Immutable superposition over basis labels.

    ``labels`` has one row per term and one column per register; ``amps`` holds
    the matching complex amplitudes.  Rows are unique.
    """

    __slots__ = ("layout", "labels", "amps")

    def __init__(self, layout: RegisterLayout, labels: np.ndarray, amps: np.ndarray):
        labels = np.asarray(labels, dtype=np.int64)
        amps = np.asarray(amps, dtype=complex)
        if labels.ndim != 2 or labels.shape[1] != len(layout) or labels.shape[0] != amps.shape[0]:
            raise LayoutMismatch(
                f"labels of shape {labels.shape} do not match layout with {len(layout)} registers"
            )
        labels.setflags(write=False)
        amps.setflags(write=False)
        self.layout = layout
        self.labels = labels
        self.amps = amps

    @classmethod
    def from_terms(cls, layout: RegisterLayout, terms: Mapping[tuple, complex]) -> "RegisterState":
        """Build a state from ``{label tuple: amplitude}``, merging and pruning."""
        acc: dict[tuple, complex] = {}
        for label, amp in terms.items():
            label = tuple(int(v) for v in label)
            if len(label) != len(layout):
                raise LayoutMismatch(f"label {label} has wrong arity for {layout}")
            for (name, width), v in zip(layout.registers, label):
                if not 0 <= v < (1 << width):
                    raise LayoutMismatch(f"value {v} does not fit register {name!r} ({width} bits)")
            acc[label] = acc.get(label, 0j) + complex(amp)
        kept = sorted((k, a) for k, a in acc.items() if abs(a) >= PRUNE)
        if not kept:
            return cls(layout, np.zeros((0, len(layout)), dtype=np.int64), np.zeros(0, dtype=complex))
        labels = np.array([k for k, _ in kept], dtype=np.int64)
        amps = np.array([a for _, a in kept], dtype=complex)
        return cls(layout, labels, amps)

    # -- accessors ---------------------------------------------------------

    def __len__(self):
        return self.labels.shape[0]

    @property
    def terms(self) -> dict[tuple, complex]:
        return {tuple(int(v) for v in row): complex(a) for row, a in zip(self.labels, self.amps)}

    def values(self, name: str) -> np.ndarray:
        return self.labels[:, self.layout.index(name)]

    def word(self, names: Sequence[str]) -> np.ndarray:
        """Composite value of several registers, first name most significant."""
        if self.layout.composite_width(names) > MAX_WORD_BITS:
            raise LayoutMismatch(f"composite {names} is wider than {MAX_WORD_BITS} bits")
        out = np.zeros(len(self), dtype=np.int64)
        for name in names:
            out = (out << self.layout.width(name)) | self.values(name)
        return out

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    # -- construction of new states ----------------------------------------

    def with_values(self, updates: Mapping[str, np.ndarray]) -> "RegisterState":
        labels = self.labels.copy()
        for name, vals in updates.items():
            width = self.layout.width(name)
            labels[:, self.layout.index(name)] = np.asarray(vals, dtype=np.int64) & ((1 << width) - 1)
        return RegisterState(self.layout, labels, self.amps)

    def with_word(self, names: Sequence[str], word: np.ndarray) -> "RegisterState":
        word = np.asarray(word, dtype=np.int64)
        updates = {}
        for name in reversed(names):
            width = self.layout.width(name)
            updates[name] = word & ((1 << width) - 1)
            word = word >> width
        return self.with_values(updates)

    def with_amps(self, amps: np.ndarray) -> "RegisterState":
        amps = np.asarray(amps, dtype=complex)
        keep = np.abs(amps) >= PRUNE
        return RegisterState(self.layout, self.labels[keep], amps[keep])

    def relabel(self, layout: RegisterLayout, columns: Mapping[str, np.ndarray]) -> "RegisterState":
        """Same amplitudes on a new layout; ``columns`` supplies every register."""
        labels = np.zeros((len(self), len(layout)), dtype=np.int64)
        for name, width in layout.registers:
            labels[:, layout.index(name)] = np.asarray(columns[name], dtype=np.int64) & ((1 << width) - 1)
        return RegisterState(layout, labels, self.amps)

    # -- comparison and display --------------------------------------------

    def inner(self, other: "RegisterState") -> complex:
        if self.layout != other.layout:
            raise LayoutMismatch("states live on different layouts")
        mine = self.terms
        return sum(np.conj(mine[k]) * a for k, a in other.terms.items() if k in mine)

    def fidelity(self, other: "RegisterState") -> float:
        return abs(self.inner(other)) ** 2

    def dump(self) -> str:
        """One line per term, e.g. ``|0⟩|1⟩|3⟩  amp=0.5+0i``."""
        lines = []
        order = np.lexsort(self.labels.T[::-1]) if len(self) else []
        for n in order:
            kets = "".join(f"|{int(v)}⟩" for v in self.labels[n])
            a = self.amps[n]
            lines.append(f"{kets}  amp={a.real:.12g}{a.imag:+.12g}i")
        return "\n".join(lines)

    def __repr__(self):
        return f"RegisterState({len(self)} terms on {self.layout.names})"


# ---------------------------------------------------------------------------
# Reversible operations and the uncompute log


@dataclass(frozen=True)
class Op:
    """A reversible label map with its inverse."""

    name: str
    targets: tuple[str, ...]
    forward: Callable[[RegisterState], RegisterState]
    backward: Callable[[RegisterState], RegisterState]

    def __call__(self, state: RegisterState) -> RegisterState:
        return self.forward(state)

    def inverse(self) -> "Op":
        return Op(self.name + "†", self.targets, self.backward, self.forward)


@dataclass
class OpLog:
    """Forward sequence of operations, replayed backwards by :func:`uncompute`."""

    ops: list[Op] = field(default_factory=list)

    def record(self, op: Op) -> None:
        self.ops.append(op)

    @property
    def targets(self) -> list[str]:
        seen: dict[str, None] = {}
        for op in self.ops:
            for t in op.targets:
                seen[t] = None
        return list(seen)

    def __len__(self):
        return len(self.ops)


def _run(op: Op, state: RegisterState, log: OpLog | None) -> RegisterState:
    out = op.forward(state)
    if log is not None:
        log.record(op)
    return out


def _xor_op(name: str, target: str, fn: Callable[[RegisterState], np.ndarray]) -> Op:
    """``target ^= fn(state)``; self-inverse while ``fn`` ignores ``target``."""

    def apply(state):
        return state.with_values({target: state.values(target) ^ fn(state)})

    return Op(name, (target,), apply, apply)


def _require_zero(state: RegisterState, reg: str, exc):
    if np.any(state.values(reg) != 0):
        raise exc(f"register {reg!r} is not |0⟩ in every term")


def apply_op(state: RegisterState, op: Op, log: OpLog | None = None) -> RegisterState:
    return _run(op, state, log)


# -- state preparation -------------------------------------------------------


def init_uniform(
    layout: RegisterLayout,
    index_registers: Sequence[str],
    values,
    value_register: str | None = None,
) -> RegisterState:
    """Uniform superposition over index tuples with a looked-up value loaded.

    ``values`` is an array indexed by the index registers (e.g. ``d[i, j]``),
    standing in for a QRAM oracle.  Every other register starts at zero.
    """
    values = np.asarray(values, dtype=np.int64)
    if values.ndim != len(index_registers):
        raise LayoutMismatch(
            f"lookup has {values.ndim} axes but {len(index_registers)} index registers were named"
        )
    grids = np.indices(values.shape).reshape(len(index_registers), -1)
    count = grids.shape[1]
    labels = np.zeros((count, len(layout)), dtype=np.int64)
    for name, axis in zip(index_registers, grids):
        if axis.max(initial=0) >= (1 << layout.width(name)):
            raise LayoutMismatch(f"index register {name!r} too narrow for {values.shape}")
        labels[:, layout.index(name)] = axis
    if value_register is not None:
        width = layout.width(value_register)
        flat = values.reshape(-1)
        if np.any(flat < 0) or np.any(flat >= (1 << width)):
            raise LayoutMismatch(f"lookup values do not fit register {value_register!r}")
        labels[:, layout.index(value_register)] = flat
    amps = np.full(count, 1 / math.sqrt(count), dtype=complex)
    return RegisterState(layout, labels, amps)


# -- reversible primitives ---------------------------------------------------


def equality_flag(state, k: int, index_reg: str, flag_reg: str, log: OpLog | None = None):
    """Flag 0 where ``index_reg == k`` and 1 elsewhere."""
    _require_zero(state, flag_reg, FlagNotClean)
    op = _xor_op(f"eq[{index_reg}=={k}]", flag_reg,
                 lambda s: (s.values(index_reg) != k).astype(np.int64))
    return _run(op, state, log)


def bit_flip(state, reg: str, mask: int | None = None, log: OpLog | None = None):
    """X on the qubits of ``reg`` selected by ``mask`` (default: all of them)."""
    if mask is None:
        mask = (1 << state.layout.width(reg)) - 1
    op = _xor_op(f"X[{reg}]", reg, lambda s: np.full(len(s), mask, dtype=np.int64))
    return _run(op, state, log)


def controlled_load(state, flag_reg: str, target_reg: str, lookup, index_reg: str,
                    fill_ones: bool = True, log: OpLog | None = None):
    """Load ``lookup[index]`` where the flag is 0; all-ones where it is 1.

    With ``fill_ones=False`` the flag-1 terms keep a zero target.
    """
    _require_zero(state, target_reg, TargetNotClean)
    lookup = np.asarray(lookup, dtype=np.int64)
    ones = (1 << state.layout.width(target_reg)) - 1

    def loaded(s):
        flag = s.values(flag_reg)
        vals = lookup[s.values(index_reg)]
        other = ones if fill_ones else 0
        return np.where(flag == 0, vals, other)

    op = _xor_op(f"load[{target_reg}|{flag_reg}]", target_reg, loaded)
    return _run(op, state, log)


def xor_lookup(state, target_reg: str, lookup, index_regs: Sequence[str], log: OpLog | None = None):
    """Unconditional QRAM-style load: ``target ^= lookup[idx...]``."""
    lookup = np.asarray(lookup, dtype=np.int64)

    def vals(s):
        return lookup[tuple(s.values(r) for r in index_regs)]

    op = _xor_op(f"qram[{target_reg}]", target_reg, vals)
    return _run(op, state, log)


def copy(state, src_reg: str, dst_reg: str, control: tuple[str, int] | None = None,
         log: OpLog | None = None):
    """CNOT-style copy ``dst ^= src``, optionally only where ``control`` holds a value."""

    def vals(s):
        v = s.values(src_reg)
        if control is not None:
            reg, want = control
            v = np.where(s.values(reg) == want, v, 0)
        return v

    op = _xor_op(f"copy[{src_reg}->{dst_reg}]", dst_reg, vals)
    return _run(op, state, log)


def _add_op(name: str, src: Sequence[str] | str, dst: Sequence[str], sign: int) -> Op:
    src = (src,) if isinstance(src, str) else tuple(src)
    dst = tuple(dst)

    def make(direction):
        def apply(state):
            width = state.layout.composite_width(dst)
            mask = (1 << width) - 1
            word = (state.word(dst) + direction * state.word(src)) & mask
            return state.with_word(dst, word)
        return apply

    return Op(name, dst, make(sign), make(-sign))


def add_into(state, src_reg, dst_regs, log: OpLog | None = None):
    """``dst += src`` modulo ``2**width(dst)``.

    ``dst_regs`` may name several registers; the first acts as the carry /
    overflow bits of the composite word.
    """
    dst = (dst_regs,) if isinstance(dst_regs, str) else tuple(dst_regs)
    return _run(_add_op(f"add[{src_reg}->{dst}]", src_reg, dst, +1), state, log)


def subtract_compare(state, src_reg: str, block: Sequence[str], log: OpLog | None = None):
    """``block -= src`` in two's complement over the composite ``block``.

    With the block's top register preset to 1, a borrow clears it exactly when
    ``src`` exceeds the rest of the block, which is the comparator output.
    """
    block = tuple(block)
    return _run(_add_op(f"sub[{src_reg}->{block}]", src_reg, block, -1), state, log)


def conditional_replace(state, flag_reg: str, dst_reg: str, src_reg: str, erase_with: str,
                        log: OpLog | None = None):
    """Where the flag is 0, swap the content of ``dst`` for that of ``src``.

    ``erase_with`` names a register holding a copy of ``dst``'s current value;
    XOR-ing it out first is what keeps the replacement reversible.
    """

    def vals(s):
        delta = s.values(erase_with) ^ s.values(src_reg)
        return np.where(s.values(flag_reg) == 0, delta, 0)

    op = _xor_op(f"replace[{dst_reg}<-{src_reg}|{flag_reg}]", dst_reg, vals)
    return _run(op, state, log)


def shift_right(state, reg: str, arithmetic: bool = True, log: OpLog | None = None):
    """Halve the value of ``reg``; every term must have a zero LSB.

    ``arithmetic=True`` keeps the sign bit so negative two's-complement values
    are halved too.  The logical variant inserts a zero at the top.
    """
    if np.any(state.values(reg) & 1):
        raise OddValue(f"register {reg!r} has an odd value in some term")
    width = state.layout.width(reg)
    top = 1 << (width - 1)
    mask = (1 << width) - 1

    def fwd(s):
        v = s.values(reg)
        out = v >> 1
        if arithmetic:
            out = out | (v & top)
        return s.with_values({reg: out})

    def bwd(s):
        return s.with_values({reg: (s.values(reg) << 1) & mask})

    return _run(Op(f"shiftR[{reg}]", (reg,), fwd, bwd), state, log)


def swap(state, a: str, b: str, log: OpLog | None = None):
    def apply(s):
        return s.with_values({a: s.values(b), b: s.values(a)})

    return _run(Op(f"swap[{a},{b}]", (a, b), apply, apply), state, log)


def uncompute(state, op_log: OpLog, ancillas: Sequence[str] | None = None, stage: str | None = None):
    """Replay ``op_log`` backwards and check the ancillas came back to |0⟩."""
    for op in reversed(op_log.ops):
        state = op.backward(state)
    regs = op_log.targets if ancillas is None else list(ancillas)
    dirty = [r for r in regs if np.any(state.values(r) != 0)]
    if dirty:
        raise DirtyAncilla(f"registers {dirty} not restored to |0⟩", stage=stage)
    return state


def dirty_weight(state, registers: Sequence[str]) -> float:
    """Total probability on terms where any of ``registers`` is nonzero."""
    bad = np.zeros(len(state), dtype=bool)
    for r in registers:
        bad |= state.values(r) != 0
    return float(np.sum(np.abs(state.amps[bad]) ** 2))


# -- amplitude transfer ------------------------------------------------------


def register_signed(state, reg: str) -> np.ndarray:
    width = state.layout.width(reg)
    v = state.values(reg)
    return np.where(v >> (width - 1) != 0, v - (1 << width), v)


def qdac_amplitude(state, value_reg: str, mode: str = "sqrt"):
    """Move register values into amplitudes.

    ``sqrt`` mode: amplitude of each term becomes ``sqrt(v / sum v)`` (values
    read unsigned).  ``linear`` mode: amplitude becomes ``v / sqrt(sum v**2)``
    with ``v`` read as two's complement.  Both scale the incoming amplitudes,
    so a uniform input gives exactly those laws.

    Returns the new state and the success probability of the rotate-and-
    postselect step, ``sum |a|^2 (v / v_max)^p`` with ``p = 1`` or ``2``.
    """
    if mode == "sqrt":
        v = state.values(value_reg).astype(float)
        if np.any(v < 0):
            raise ValueError("sqrt mode needs nonnegative values")
        factor = np.sqrt(v)
        vmax = v.max(initial=0.0)
        weights = v / vmax if vmax > 0 else v
    elif mode == "linear":
        v = register_signed(state, value_reg).astype(float)
        factor = v
        vmax = np.abs(v).max(initial=0.0)
        weights = (v / vmax) ** 2 if vmax > 0 else v
    else:
        raise ValueError(f"unknown QDAC mode {mode!r}")
    if vmax == 0:
        raise AllZeroValues(f"register {value_reg!r} is zero in every term")
    p_in = np.abs(state.amps) ** 2
    success = float(np.sum(p_in * weights))
    amps = state.amps * factor
    amps = amps / math.sqrt(float(np.sum(np.abs(amps) ** 2)))
    return state.with_amps(amps), success
