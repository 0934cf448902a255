"""Operator-overloading front end over :class:`~hotad.tape.TapeBuilder`.

>>> from hotad.recording import record, sin
>>> tape = record(lambda x: x[0] * x[1] * sin(x[2]), n=3)
>>> [node.elemental.symbol for node in tape.nodes]
['mul', 'sin', 'mul']

Python constants are folded into the constant-parameter elementals
(``scale``, ``addc``, ``powi``), never recorded as nodes.
"""
from __future__ import annotations

import math
from numbers import Real
from typing import Callable, Sequence

from .errors import MalformedTapeError
from .tape import Tape, TapeBuilder


class Var:
    __slots__ = ("builder", "index")

    def __init__(self, builder: TapeBuilder, index: int):
        self.builder = builder
        self.index = index

    def _new(self, symbol, *others, const=None) -> "Var":
        idx = [self.index]
        for o in others:
            if o.builder is not self.builder:
                raise MalformedTapeError("cannot mix variables from different tapes")
            idx.append(o.index)
        return Var(self.builder, self.builder.apply(symbol, *idx, const=const))

    def __add__(self, other):
        if isinstance(other, Var):
            return self._new("add", other)
        if other == 0:
            return self
        return self._new("addc", const=float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Var):
            return self._new("sub", other)
        if other == 0:
            return self
        return self._new("addc", const=-float(other))

    def __rsub__(self, other):
        neg = self._new("neg")
        return neg if other == 0 else neg._new("addc", const=float(other))

    def __mul__(self, other):
        if isinstance(other, Var):
            return self._new("mul", other)
        if other == 1:
            return self
        return self._new("scale", const=float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            return self._new("div", other)
        return self._new("scale", const=1.0 / float(other))

    def __rtruediv__(self, other):
        r = self._new("recip")
        return r if other == 1 else r._new("scale", const=float(other))

    def __neg__(self):
        return self._new("neg")

    def __pos__(self):
        return self

    def __pow__(self, p):
        if isinstance(p, Var):
            return exp(p * log(self))
        if float(p) == int(p):
            p = int(p)
            if p == 1:
                return self
            if p == 2:
                return self._new("square")
            return self._new("powi", const=float(p))
        return exp(float(p) * log(self))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __repr__(self) -> str:
        return f"Var({self.index})"


def _unary(symbol: str, fallback: Callable[[float], float]):
    def f(v):
        if isinstance(v, Var):
            return v._new(symbol)
        return fallback(v)
    f.__name__ = symbol
    return f


sin = _unary("sin", math.sin)
cos = _unary("cos", math.cos)
exp = _unary("exp", math.exp)
log = _unary("log", math.log)
sqrt = _unary("sqrt", math.sqrt)
square = _unary("square", lambda v: v * v)
recip = _unary("recip", lambda v: 1.0 / v)


def record(fn: Callable[[Sequence[Var]], Var], n: int) -> Tape:
    """Record ``fn`` applied to ``n`` independent variables as a tape."""
    b = TapeBuilder(n)
    xs = [Var(b, i) for i in b.inputs]
    out = fn(xs)
    if isinstance(out, Real):
        raise MalformedTapeError("function does not depend on its inputs")
    if out.builder is not b:
        raise MalformedTapeError("output was not recorded on this tape")
    return b.seal(output=out.index)
