"""Evaluation tape: the recorded list ``v_i = phi_i(v_P(i))``.

Indices follow the shifted convention used throughout: independents are
``1-n .. 0`` and intermediates ``1 .. l``, the output being ``v_l``.  Storage
is dense and 0-based, so logical index ``i`` lives at position ``i + n - 1``.
Node ``t`` (0-based position in the node arrays) is logical index ``t + 1``.

Tapes are immutable once sealed; the node arrays are flagged read-only.
"""
from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numba import njit

from . import elementals as el
from .elementals import Elemental
from .errors import ArityError, EvaluationError, MalformedTapeError, ShapeError

NO_ARG = -1


class Node(NamedTuple):
    elemental: Elemental
    preds: tuple[int, ...]
    const: float | None = None


class Tape:
    """Sealed evaluation list over ``n`` independents.

    ``op``, ``arg0``, ``arg1`` and ``const`` hold one entry per node; operand
    arrays store 0-based storage positions (``NO_ARG`` for a missing second
    operand).  Use :class:`TapeBuilder`, :func:`build` or
    :func:`hotad.recording.record` rather than calling this directly.
    """

    __slots__ = ("n", "op", "arg0", "arg1", "const")

    def __init__(self, n: int, op, arg0, arg1, const, *, validate: bool = True):
        self.n = int(n)
        self.op = np.ascontiguousarray(op, dtype=np.int8)
        self.arg0 = np.ascontiguousarray(arg0, dtype=np.int32)
        self.arg1 = np.ascontiguousarray(arg1, dtype=np.int32)
        self.const = np.ascontiguousarray(const, dtype=np.float64)
        if validate:
            self._validate()
        for a in (self.op, self.arg0, self.arg1, self.const):
            a.flags.writeable = False

    def _validate(self) -> None:
        n, ell = self.n, len(self.op)
        if n < 1:
            raise MalformedTapeError("a tape needs at least one independent")
        if ell < 1:
            raise MalformedTapeError("a tape needs at least one node")
        if not (len(self.arg0) == len(self.arg1) == len(self.const) == ell):
            raise MalformedTapeError("node arrays have inconsistent lengths")
        if n + ell >= 2**31 - 1:
            raise MalformedTapeError("tape too large for 32-bit indices")
        if self.op.min() < 0 or self.op.max() >= el.N_OPS:
            raise MalformedTapeError("unknown opcode on tape")
        own = np.arange(n, n + ell, dtype=np.int64)
        binary = el.ARITY[self.op] == 2
        if np.any(binary != (self.arg1 != NO_ARG)):
            t = int(np.flatnonzero(binary != (self.arg1 != NO_ARG))[0])
            raise ArityError(f"node {t + 1}: operand count does not match "
                             f"{el.from_opcode(self.op[t]).symbol}")
        bad = (self.arg0 < 0) | (self.arg0 >= own) | (binary & ((self.arg1 < 0) | (self.arg1 >= own)))
        if np.any(bad):
            t = int(np.flatnonzero(bad)[0])
            raise MalformedTapeError(f"node {t + 1} references an operand that does not precede it")
        if np.any(binary & (self.arg0 == self.arg1)):
            t = int(np.flatnonzero(binary & (self.arg0 == self.arg1))[0])
            raise MalformedTapeError(f"node {t + 1} repeats an operand; use the unary form")
        if not np.all(np.isfinite(self.const)):
            raise MalformedTapeError("non-finite constant on tape")
        powi = self.op == el.POWI
        if np.any(self.const[powi] != np.round(self.const[powi])):
            raise MalformedTapeError("powi exponent must be an integer")

    # -- shape ------------------------------------------------------------
    @property
    def n_independent(self) -> int:
        return self.n

    @property
    def n_nodes(self) -> int:
        return len(self.op)

    @property
    def output_index(self) -> int:
        return len(self.op)

    @property
    def dim(self) -> int:
        """Number of logical variables, ``n + l``."""
        return self.n + len(self.op)

    def __len__(self) -> int:
        return len(self.op)

    def pos(self, i: int) -> int:
        """Storage position of logical index ``i``."""
        return i + self.n - 1

    def index(self, pos: int) -> int:
        return pos - self.n + 1

    # -- node access ------------------------------------------------------
    def node(self, i: int) -> Node:
        if not 1 <= i <= len(self.op):
            raise IndexError(f"node index {i} outside 1..{len(self.op)}")
        t = i - 1
        e = el.from_opcode(self.op[t])
        preds = (self.index(int(self.arg0[t])),)
        if e.arity == 2:
            preds += (self.index(int(self.arg1[t])),)
        c = float(self.const[t]) if e.has_const else None
        return Node(e, preds, c)

    @property
    def nodes(self) -> list[Node]:
        return [self.node(i) for i in range(1, len(self.op) + 1)]

    def preds(self, i: int) -> tuple[int, ...]:
        return self.node(i).preds

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tape):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.op, other.op)
                and np.array_equal(self.arg0, other.arg0)
                and np.array_equal(self.arg1, other.arg1)
                and np.array_equal(self.const, other.const))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Tape(n={self.n}, l={len(self.op)})"


class TapeBuilder:
    """Append-only construction of a tape.

    Operands are logical indices.  ``apply`` returns the index of the new node.
    Repeated operands are rewritten to unary forms (``mul(a, a)`` becomes
    ``square(a)``) so that predecessor sets never contain duplicates.
    """

    def __init__(self, n: int):
        if n < 1:
            raise MalformedTapeError("a tape needs at least one independent")
        self.n = n
        self._op: list[int] = []
        self._a0: list[int] = []
        self._a1: list[int] = []
        self._c: list[float] = []

    @property
    def inputs(self) -> list[int]:
        return list(range(1 - self.n, 1))

    @property
    def last(self) -> int:
        return len(self._op)

    def apply(self, symbol: str | Elemental, *operands: int, const: float | None = None) -> int:
        e = symbol if isinstance(symbol, Elemental) else el.lookup(symbol)
        if len(operands) != e.arity:
            raise ArityError(f"{e.symbol} takes {e.arity} operand(s), got {len(operands)}")
        if e.has_const and const is None:
            raise ArityError(f"{e.symbol} requires a constant parameter")
        if not e.has_const and const is not None:
            raise ArityError(f"{e.symbol} takes no constant parameter")
        i = len(self._op) + 1
        for j in operands:
            if not isinstance(j, (int, np.integer)) or not 1 - self.n <= j < i:
                raise MalformedTapeError(f"node {i} references {j}, outside {1 - self.n}..{i - 1}")
        c = 0.0 if const is None else float(const)
        if e.integer_const and c != round(c):
            raise MalformedTapeError("powi exponent must be an integer")
        if e.arity == 2 and operands[0] == operands[1]:
            e, operands, c = _fold_repeated(e, operands[0])
        self._op.append(e.opcode)
        self._a0.append(int(operands[0]) + self.n - 1)
        self._a1.append(int(operands[1]) + self.n - 1 if e.arity == 2 else NO_ARG)
        self._c.append(c)
        return i

    def seal(self, output: int | None = None) -> Tape:
        """Freeze the tape.  If ``output`` is not the last node, an ``id`` node is appended."""
        if output is not None and (output < 1 or output != len(self._op)):
            self.apply("id", output)
        if not self._op:
            raise MalformedTapeError("a tape needs at least one node")
        return Tape(self.n, self._op, self._a0, self._a1, self._c)


def _fold_repeated(e: Elemental, j: int):
    if e.opcode == el.MUL:
        return el.lookup("square"), (j,), 0.0
    if e.opcode == el.ADD:
        return el.lookup("scale"), (j,), 2.0
    if e.opcode == el.SUB:
        return el.lookup("scale"), (j,), 0.0
    # div(a, a) == 1 wherever defined
    return el.lookup("powi"), (j,), 0.0


def build(program: Iterable[Sequence], n: int) -> Tape:
    """Build a tape from ``(symbol, operand, ..., [const])`` entries.

    >>> t = build([("mul", -2, -1), ("sin", 0), ("mul", 2, 1)], n=3)
    >>> t.preds(3)
    (2, 1)
    """
    b = TapeBuilder(n)
    for entry in program:
        if isinstance(entry, Node):
            b.apply(entry.elemental, *entry.preds, const=entry.const)
            continue
        symbol, *rest = entry
        e = el.lookup(symbol)
        if e.has_const:
            if len(rest) != e.arity + 1:
                raise ArityError(f"{symbol} takes {e.arity} operand(s) and a constant")
            b.apply(e, *rest[:-1], const=rest[-1])
        else:
            b.apply(e, *rest)
    return b.seal()


# -- text format ------------------------------------------------------------

def dump_text(tape: Tape) -> str:
    lines = []
    for i, node in enumerate(tape.nodes, start=1):
        parts = [str(i), node.elemental.symbol, *map(str, node.preds)]
        if node.const is not None:
            parts.append(repr(node.const))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_text(text: str, n: int | None = None) -> Tape:
    """Inverse of :func:`dump_text`.

    ``n`` defaults to the smallest operand index seen, which under-counts if
    the leading independents are unused; pass it explicitly in that case.
    """
    program = []
    lowest = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if int(fields[0]) != len(program) + 1:
            raise MalformedTapeError(f"line {lineno}: expected node {len(program) + 1}")
        e = el.lookup(fields[1])
        operands = [int(f) for f in fields[2:2 + e.arity]]
        extra = fields[2 + e.arity:]
        if len(operands) != e.arity or len(extra) != int(e.has_const):
            raise ArityError(f"line {lineno}: wrong field count for {e.symbol}")
        lowest = min([lowest, *operands])
        program.append((e.symbol, *operands, *map(float, extra)))
    return build(program, n if n is not None else 1 - lowest)


# -- forward sweep ------------------------------------------------------------

class NodeVector:
    """Per-variable values addressed by logical index ``1-n .. l``."""

    __slots__ = ("data", "n")

    def __init__(self, data: np.ndarray, n: int):
        self.data = data
        self.n = n

    def __getitem__(self, i: int) -> float:
        if not 1 - self.n <= i <= len(self.data) - self.n:
            raise IndexError(f"index {i} outside {1 - self.n}..{len(self.data) - self.n}")
        return float(self.data[i + self.n - 1])

    def __len__(self) -> int:
        return len(self.data)

    @property
    def independents(self) -> np.ndarray:
        return self.data[:self.n]

    @property
    def last(self) -> float:
        return float(self.data[-1])


class ValueTrace(NodeVector):
    @property
    def values(self) -> np.ndarray:
        return self.data

    @property
    def f(self) -> float:
        return self.last


@njit(cache=True)
def _forward(op, a0, a1, cst, vals):
    n = vals.shape[0] - op.shape[0]
    for t in range(op.shape[0]):
        x = vals[a0[t]]
        y = vals[a1[t]] if a1[t] >= 0 else 0.0
        if not el.in_domain(op[t], x, y, cst[t]):
            return t
        v = el.value(op[t], x, y, cst[t])
        if not math.isfinite(v):
            return t
        vals[n + t] = v
    return -1


def eval_forward(tape: Tape, x) -> ValueTrace:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tape.n,):
        raise ShapeError(f"expected {tape.n} inputs, got shape {x.shape}")
    vals = np.empty(tape.dim)
    vals[:tape.n] = x
    bad = _forward(tape.op, tape.arg0, tape.arg1, tape.const, vals)
    if bad >= 0:
        sym = el.from_opcode(tape.op[bad]).symbol
        raise EvaluationError(f"{sym} at node {bad + 1} evaluated outside its domain",
                              node=bad + 1, symbol=sym)
    return ValueTrace(vals, tape.n)


def check_trace(tape: Tape, trace: ValueTrace) -> None:
    if trace.n != tape.n or len(trace) != tape.dim:
        raise ShapeError(f"trace of length {len(trace)} (n={trace.n}) does not "
                         f"match tape with n={tape.n}, l={tape.n_nodes}")


def check_direction(tape: Tape, d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (tape.n,):
        raise ShapeError(f"direction must have shape ({tape.n},), got {d.shape}")
    return d
