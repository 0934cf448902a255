"""Sparse Hessian by component-wise edge_pushing, and the Hessian-vector product.

The reverse sweep visits nodes ``i = l .. 1``.  ``W`` holds the lower triangle
of the running second-order adjoint.  For node ``i`` the sweep

* pushes every stored ``W{i,k}`` onto the predecessors of ``i``,
* creates ``vbar_i * d2 phi_i`` on predecessor pairs,
* accumulates the adjoints of the predecessors,

then releases row ``i``: it is never read again, since every later write
targets a row below ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import elementals as el
from .first_order import _tangents
from .sparse_sym import SymSparseMat, _add, _empty, _release, _row_ok
from .tape import Tape, ValueTrace, check_direction, check_trace


@njit(cache=True)
def _push(head, length, cls, meta, nbr, wt, r, j0, j1, g0, g1):
    """Pushing of row ``r`` onto predecessors ``j0`` and ``j1`` (``j1 < 0`` for unary)."""
    h = head[r]
    if h < 0:
        return nbr, wt
    for q in range(length[r]):
        k = nbr[h + q]
        w = wt[h + q]
        if k < r:
            if j0 == k:
                nbr, wt = _add(head, length, cls, meta, nbr, wt, k, k, 2.0 * g0 * w)
            else:
                nbr, wt = _add(head, length, cls, meta, nbr, wt, j0, k, g0 * w)
            if j1 >= 0:
                if j1 == k:
                    nbr, wt = _add(head, length, cls, meta, nbr, wt, k, k, 2.0 * g1 * w)
                else:
                    nbr, wt = _add(head, length, cls, meta, nbr, wt, j1, k, g1 * w)
        else:
            nbr, wt = _add(head, length, cls, meta, nbr, wt, j0, j0, g0 * g0 * w)
            if j1 >= 0:
                nbr, wt = _add(head, length, cls, meta, nbr, wt, j0, j1, g0 * g1 * w)
                nbr, wt = _add(head, length, cls, meta, nbr, wt, j1, j1, g1 * g1 * w)
    return nbr, wt


@njit(cache=True)
def _create(head, length, cls, meta, nbr, wt, j0, j1, scale, a00, a01, a11, mask):
    """Add ``scale * a`` on predecessor pairs; ``mask`` bits 1/2/4 select (0,0)/(0,1)/(1,1)."""
    if mask & 1:
        nbr, wt = _add(head, length, cls, meta, nbr, wt, j0, j0, scale * a00)
    if j1 >= 0:
        if mask & 2:
            nbr, wt = _add(head, length, cls, meta, nbr, wt, j0, j1, scale * a01)
        if mask & 4:
            nbr, wt = _add(head, length, cls, meta, nbr, wt, j1, j1, scale * a11)
    return nbr, wt


@njit(cache=True)
def _rows_bad(head, length, nbr, j0, j1, rows, m):
    """Count non-canonical rows among ``j0``, ``j1`` and ``rows[:m]``."""
    bad = 0
    if not _row_ok(head, length, nbr, j0):
        bad += 1
    if j1 >= 0 and not _row_ok(head, length, nbr, j1):
        bad += 1
    for q in range(m):
        if not _row_ok(head, length, nbr, rows[q]):
            bad += 1
    return bad


@njit(cache=True)
def _rows_nonempty_from(length, r):
    """Rows at or above ``r`` still holding entries; zero after node ``r`` is swept."""
    high = 0
    for s in range(r, length.shape[0]):
        if length[s] != 0:
            high += 1
    return high


@njit(cache=True)
def _row_neighbours(head, length, nbr, r, buf):
    h = head[r]
    m = 0
    if h >= 0:
        m = length[r]
        if m > buf.shape[0]:
            buf = np.empty(2 * m, np.int64)
        for q in range(m):
            buf[q] = nbr[h + q]
    return buf, m


@njit(cache=True)
def _edge_pushing(op, a0, a1, cst, vals, debug):
    N = vals.shape[0]
    n = N - op.shape[0]
    bar = np.zeros(N)
    bar[N - 1] = 1.0
    Wh, Wl, Wc, Wm, Wn, Ww = _empty(N, 4 * n)
    audit = np.zeros(2, np.int64)
    buf = np.empty(16, np.int64)
    for t in range(op.shape[0] - 1, -1, -1):
        r = n + t
        j0 = a0[t]
        j1 = a1[t]
        y = vals[j1] if j1 >= 0 else 0.0
        p = el.partials(op[t], vals[j0], y, cst[t])
        g0 = p[1]
        g1 = p[2]
        bi = bar[r]
        if debug:
            buf, nread = _row_neighbours(Wh, Wl, Wn, r, buf)
        # Pushing
        Wn, Ww = _push(Wh, Wl, Wc, Wm, Wn, Ww, r, j0, j1, g0, g1)
        # Creating
        Wn, Ww = _create(Wh, Wl, Wc, Wm, Wn, Ww, j0, j1, bi, p[3], p[4], p[5], el.D2_MASK[op[t]])
        # Adjoint
        bar[j0] += bi * g0
        if j1 >= 0:
            bar[j1] += bi * g1
        _release(Wh, Wl, Wc, Wm, Wn, r)
        if debug:
            audit[0] += _rows_bad(Wh, Wl, Wn, j0, j1, buf, nread)
            audit[1] += _rows_nonempty_from(Wl, r)
    return bar, (Wh, Wl, Wc, Wm, Wn, Ww), audit


@njit(cache=True)
def _hessian_vector(op, a0, a1, cst, vals, dot):
    N = vals.shape[0]
    n = N - op.shape[0]
    bar = np.zeros(N)
    bar[N - 1] = 1.0
    w = np.zeros(N)
    for t in range(op.shape[0] - 1, -1, -1):
        r = n + t
        j0 = a0[t]
        j1 = a1[t]
        y = vals[j1] if j1 >= 0 else 0.0
        p = el.partials(op[t], vals[j0], y, cst[t])
        bi = bar[r]
        wi = w[r]
        d0 = dot[j0]
        d1 = dot[j1] if j1 >= 0 else 0.0
        # w <- w . DPhi, then w += vbar^T D2Phi . vdot
        w[j0] += wi * p[1] + bi * (p[3] * d0 + p[4] * d1)
        bar[j0] += bi * p[1]
        if j1 >= 0:
            w[j1] += wi * p[2] + bi * (p[4] * d0 + p[5] * d1)
            bar[j1] += bi * p[2]
    return w, bar


@dataclass
class SweepAudit:
    """Invariant violations counted by a debug-mode sweep."""

    malformed_rows: int = 0
    lemma_violations: int = 0
    containment_violations: int = 0

    @property
    def ok(self) -> bool:
        return not (self.malformed_rows or self.lemma_violations or self.containment_violations)


@dataclass
class HessianResult:
    W: SymSparseMat
    gradient: np.ndarray
    audit: SweepAudit | None = None

    def dense(self) -> np.ndarray:
        return self.W.to_dense()


def _independent_block(state, n: int) -> SymSparseMat:
    full = SymSparseMat._from_state(state, base=1 - n)
    return full.restrict_to_independents(n)


def edge_pushing(tape: Tape, trace: ValueTrace, debug: bool = False) -> HessianResult:
    """Hessian of ``f`` at the traced point, as a sparse symmetric matrix over ``1..n``."""
    check_trace(tape, trace)
    bar, state, audit = _edge_pushing(tape.op, tape.arg0, tape.arg1, tape.const,
                                      trace.values, bool(debug))
    W = _independent_block(state, tape.n)
    rep = SweepAudit(int(audit[0]), int(audit[1])) if debug else None
    return HessianResult(W, bar[:tape.n].copy(), rep)


def hessian_vector(tape: Tape, trace: ValueTrace, d) -> np.ndarray:
    """``D^2 f(x) . d`` without forming the Hessian."""
    check_trace(tape, trace)
    d = check_direction(tape, d)
    dot = np.empty(tape.dim)
    dot[:tape.n] = d
    _tangents(tape.op, tape.arg0, tape.arg1, tape.const, trace.values, dot)
    w, _ = _hessian_vector(tape.op, tape.arg0, tape.arg1, tape.const, trace.values, dot)
    return w[:tape.n].copy()
