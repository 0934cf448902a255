"""Elemental functions and their closed-form partials up to third order.

Every tape node applies one elemental of arity 1 or 2.  Partials are reported
in symmetric packed form indexed by how many times the second argument is
differentiated: for a binary elemental ``d2 = (h00, h01, h11)`` and
``d3 = (t000, t001, t011, t111)``; for a unary one ``d2 = (h00,)`` and
``d3 = (t000,)``.

The numeric kernels (:func:`value`, :func:`partials`, :func:`in_domain`) are
numba-compiled so the sweeps can call them per node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

from .errors import ArityError, EvaluationError, UnknownElementalError

ID, ADD, SUB, MUL, DIV, SQUARE, NEG, SCALE, ADDC = 0, 1, 2, 3, 4, 5, 6, 7, 8
SIN, COS, EXP, LOG, RECIP, POWI, SQRT = 9, 10, 11, 12, 13, 14, 15
N_OPS = 16

# Structural (pattern) masks: which packed d2/d3 entries can be nonzero.
# d2 bits: 1 -> (0,0), 2 -> (0,1), 4 -> (1,1)
# d3 bits: 1 -> (0,0,0), 2 -> (0,0,1), 4 -> (0,1,1), 8 -> (1,1,1)
_D2_MASK = np.zeros(N_OPS, dtype=np.int64)
_D3_MASK = np.zeros(N_OPS, dtype=np.int64)
_D2_MASK[MUL] = 2
_D2_MASK[DIV], _D3_MASK[DIV] = 2 | 4, 4 | 8
_D2_MASK[SQUARE] = 1
for _op in (SIN, COS, EXP, LOG, RECIP, POWI, SQRT):
    _D2_MASK[_op], _D3_MASK[_op] = 1, 1
D2_MASK = _D2_MASK
D3_MASK = _D3_MASK
ARITY = np.array([1, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1], dtype=np.int64)


@njit(cache=True)
def in_domain(op, x, y, c):
    if op == LOG or op == SQRT:
        return x > 0.0
    if op == RECIP:
        return x != 0.0
    if op == DIV:
        return y != 0.0
    if op == POWI:
        return c >= 0.0 or x != 0.0
    return True


@njit(cache=True)
def value(op, x, y, c):
    if op == ID:
        return x
    if op == ADD:
        return x + y
    if op == SUB:
        return x - y
    if op == MUL:
        return x * y
    if op == DIV:
        return x / y
    if op == SQUARE:
        return x * x
    if op == NEG:
        return -x
    if op == SCALE:
        return c * x
    if op == ADDC:
        return x + c
    if op == SIN:
        return math.sin(x)
    if op == COS:
        return math.cos(x)
    if op == EXP:
        return math.exp(x)
    if op == LOG:
        return math.log(x)
    if op == RECIP:
        return 1.0 / x
    if op == POWI:
        return x ** int(c)
    # SQRT
    return math.sqrt(x)


@njit(cache=True)
def _powi_term(x, k, order):
    coef = 1.0
    for m in range(order):
        coef *= k - m
    if coef == 0.0:
        return 0.0
    return coef * x ** (k - order)


@njit(cache=True)
def partials(op, x, y, c):
    """Return (value, g0, g1, h00, h01, h11, t000, t001, t011, t111)."""
    z = 0.0
    if op == ID:
        return x, 1.0, z, z, z, z, z, z, z, z
    if op == ADD:
        return x + y, 1.0, 1.0, z, z, z, z, z, z, z
    if op == SUB:
        return x - y, 1.0, -1.0, z, z, z, z, z, z, z
    if op == MUL:
        return x * y, y, x, z, 1.0, z, z, z, z, z
    if op == DIV:
        r = 1.0 / y
        r2 = r * r
        r3 = r2 * r
        return (x * r, r, -x * r2, z, -r2, 2.0 * x * r3,
                z, z, 2.0 * r3, -6.0 * x * r3 * r)
    if op == SQUARE:
        return x * x, 2.0 * x, z, 2.0, z, z, z, z, z, z
    if op == NEG:
        return -x, -1.0, z, z, z, z, z, z, z, z
    if op == SCALE:
        return c * x, c, z, z, z, z, z, z, z, z
    if op == ADDC:
        return x + c, 1.0, z, z, z, z, z, z, z, z
    if op == SIN:
        s = math.sin(x)
        co = math.cos(x)
        return s, co, z, -s, z, z, -co, z, z, z
    if op == COS:
        s = math.sin(x)
        co = math.cos(x)
        return co, -s, z, -co, z, z, s, z, z, z
    if op == EXP:
        e = math.exp(x)
        return e, e, z, e, z, z, e, z, z, z
    if op == LOG:
        r = 1.0 / x
        return math.log(x), r, z, -r * r, z, z, 2.0 * r * r * r, z, z, z
    if op == RECIP:
        r = 1.0 / x
        r2 = r * r
        return r, -r2, z, 2.0 * r2 * r, z, z, -6.0 * r2 * r2, z, z, z
    if op == POWI:
        k = int(c)
        return (x ** k, _powi_term(x, k, 1), z, _powi_term(x, k, 2), z, z,
                _powi_term(x, k, 3), z, z, z)
    # SQRT
    s = math.sqrt(x)
    return s, 0.5 / s, z, -0.25 / (s * x), z, z, 0.375 / (s * x * x), z, z, z


class Partials(NamedTuple):
    value: float
    d1: tuple
    d2: tuple
    d3: tuple

    def second(self, j: int, k: int) -> float:
        return self.d2[j + k]

    def third(self, j: int, k: int, p: int) -> float:
        return self.d3[j + k + p]


@dataclass(frozen=True)
class Elemental:
    symbol: str
    opcode: int
    arity: int
    has_const: bool = False
    integer_const: bool = False

    @property
    def d2_mask(self) -> int:
        return int(D2_MASK[self.opcode])

    @property
    def d3_mask(self) -> int:
        return int(D3_MASK[self.opcode])

    @property
    def is_linear(self) -> bool:
        return self.d2_mask == 0

    def value(self, *args: float, c: float | None = None) -> float:
        return partials_at(self, args, c).value


_CATALOG = (
    Elemental("id", ID, 1),
    Elemental("add", ADD, 2),
    Elemental("sub", SUB, 2),
    Elemental("mul", MUL, 2),
    Elemental("div", DIV, 2),
    Elemental("square", SQUARE, 1),
    Elemental("neg", NEG, 1),
    Elemental("scale", SCALE, 1, has_const=True),
    Elemental("addc", ADDC, 1, has_const=True),
    Elemental("sin", SIN, 1),
    Elemental("cos", COS, 1),
    Elemental("exp", EXP, 1),
    Elemental("log", LOG, 1),
    Elemental("recip", RECIP, 1),
    Elemental("powi", POWI, 1, has_const=True, integer_const=True),
    Elemental("sqrt", SQRT, 1),
)
_BY_SYMBOL = {e.symbol: e for e in _CATALOG}
_BY_OPCODE = {e.opcode: e for e in _CATALOG}


def catalog() -> list[Elemental]:
    return list(_CATALOG)


def lookup(symbol: str) -> Elemental:
    try:
        return _BY_SYMBOL[symbol]
    except KeyError:
        raise UnknownElementalError(f"unknown elemental {symbol!r}") from None


def from_opcode(opcode: int) -> Elemental:
    return _BY_OPCODE[int(opcode)]


def partials_at(e: Elemental, args: Sequence[float], c: float | None = None) -> Partials:
    """Value and packed partial tables of ``e`` at ``args``.

    Raises :class:`EvaluationError` outside the domain and :class:`ArityError`
    if ``len(args)`` differs from the arity.
    """
    if len(args) != e.arity:
        raise ArityError(f"{e.symbol} takes {e.arity} argument(s), got {len(args)}")
    if e.has_const and c is None:
        raise ArityError(f"{e.symbol} requires a constant parameter")
    cc = 0.0 if c is None else float(c)
    x = float(args[0])
    y = float(args[1]) if e.arity == 2 else 0.0
    if not in_domain(e.opcode, x, y, cc):
        raise EvaluationError(f"{e.symbol}{tuple(args)} is outside the domain", symbol=e.symbol)
    v, g0, g1, h00, h01, h11, t0, t1, t2, t3 = partials(e.opcode, x, y, cc)
    if e.arity == 1:
        return Partials(v, (g0,), (h00,), (t0,))
    return Partials(v, (g0, g1), (h00, h01, h11), (t0, t1, t2, t3))
