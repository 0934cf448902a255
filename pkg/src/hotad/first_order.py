"""Reverse gradient and forward directional derivative, component-wise."""
from __future__ import annotations

import numpy as np
from numba import njit

from . import elementals as el
from .tape import NodeVector, Tape, ValueTrace, check_direction, check_trace


class AdjointVector(NodeVector):
    """Adjoints after the reverse sweep; ``[i]`` is the value fixed at iteration ``i``."""

    @property
    def gradient(self) -> np.ndarray:
        return self.data[:self.n].copy()


class TangentVector(NodeVector):
    """Tangents ``dot v``; ``[i]`` is final once node ``i`` has been swept."""

    @property
    def directional(self) -> float:
        return self.last


@njit(cache=True)
def _adjoints(op, a0, a1, cst, vals, seed):
    N = vals.shape[0]
    n = N - op.shape[0]
    bar = np.zeros(N)
    bar[N - 1] = seed
    for t in range(op.shape[0] - 1, -1, -1):
        bi = bar[n + t]
        j0 = a0[t]
        j1 = a1[t]
        y = vals[j1] if j1 >= 0 else 0.0
        p = el.partials(op[t], vals[j0], y, cst[t])
        bar[j0] += bi * p[1]
        if j1 >= 0:
            bar[j1] += bi * p[2]
    return bar


@njit(cache=True)
def _tangents(op, a0, a1, cst, vals, dot):
    n = vals.shape[0] - op.shape[0]
    for t in range(op.shape[0]):
        j0 = a0[t]
        j1 = a1[t]
        y = vals[j1] if j1 >= 0 else 0.0
        p = el.partials(op[t], vals[j0], y, cst[t])
        acc = dot[j0] * p[1]
        if j1 >= 0:
            acc += dot[j1] * p[2]
        dot[n + t] = acc


@njit(cache=True)
def _tangents_by_successor(op, a0, a1, cst, vals, dot, sptr, succ):
    # for j (ascending), for i in S(j): dot_i += dot_j * d phi_i / d v_j
    n = vals.shape[0] - op.shape[0]
    for j in range(vals.shape[0]):
        dj = dot[j]
        for q in range(sptr[j], sptr[j + 1]):
            t = succ[q]
            y = vals[a1[t]] if a1[t] >= 0 else 0.0
            p = el.partials(op[t], vals[a0[t]], y, cst[t])
            g = p[1] if a0[t] == j else p[2]
            dot[n + t] += dj * g


def adjoints(tape: Tape, trace: ValueTrace, seed: float = 1.0) -> AdjointVector:
    check_trace(tape, trace)
    bar = _adjoints(tape.op, tape.arg0, tape.arg1, tape.const, trace.values, float(seed))
    return AdjointVector(bar, tape.n)


def reverse_gradient(tape: Tape, trace: ValueTrace, seed: float = 1.0) -> np.ndarray:
    """Gradient of ``seed * f`` at the traced point."""
    return adjoints(tape, trace, seed).gradient


def forward_tangent(tape: Tape, trace: ValueTrace, d) -> TangentVector:
    check_trace(tape, trace)
    d = check_direction(tape, d)
    dot = np.empty(tape.dim)
    dot[:tape.n] = d
    _tangents(tape.op, tape.arg0, tape.arg1, tape.const, trace.values, dot)
    return TangentVector(dot, tape.n)


def successors(tape: Tape) -> tuple[np.ndarray, np.ndarray]:
    """CSR successor sets: ``succ[sptr[j]:sptr[j+1]]`` are the nodes reading position ``j``."""
    t = np.arange(tape.n_nodes)
    binary = tape.arg1 >= 0
    src = np.concatenate([tape.arg0, tape.arg1[binary]]).astype(np.int64)
    dst = np.concatenate([t, t[binary]])
    order = np.argsort(src, kind="stable")
    sptr = np.zeros(tape.dim + 1, np.int64)
    np.add.at(sptr, src + 1, 1)
    return np.cumsum(sptr), dst[order]


def forward_tangent_successors(tape: Tape, trace: ValueTrace, d) -> TangentVector:
    """Same result as :func:`forward_tangent`, traversing successor sets instead."""
    check_trace(tape, trace)
    d = check_direction(tape, d)
    dot = np.zeros(tape.dim)
    dot[:tape.n] = d
    sptr, succ = successors(tape)
    _tangents_by_successor(tape.op, tape.arg0, tape.arg1, tape.const, trace.values, dot, sptr, succ)
    return TangentVector(dot, tape.n)
