"""Third-order derivatives: the sparse tensor-vector product and a dense reference.

:func:`rev_hedir` computes ``Td = D^3 f(x) . d``, a symmetric ``n x n`` matrix,
in one reverse sweep that carries three sparse symmetric accumulators: the
adjoints ``vbar``, the second-order adjoint ``W`` and its directional
derivative ``Td``.  Tangents ``vdot`` come from a forward pass first.

For each node ``i`` (from last to first), with predecessor partials ``g``,
second partials ``H`` and third partials ``D3``:

a. push the ``Td`` row of ``i`` onto the predecessors;
b. connect ``W`` into ``Td``: each ``W{i,k}`` contributes through the tangent
   of the predecessor gradient, ``s_j = sum_p H[j,p] vdot_p``, and through
   ``vdot_k H``;
c. create ``vbar_i * (D3 . vdot)`` on predecessor pairs;
d. push and create in ``W`` exactly as :func:`~hotad.second_order.edge_pushing`;
e. accumulate adjoints.

Every write to ``Td`` lands on an entry that step (d) also writes in ``W``, so
the stored pattern of ``Td`` is contained in that of ``W``.

:func:`reverse_tensor_dense` is the dense reference: it carries the full third
order adjoint tensor over the variables alive at each step of the sweep.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import elementals as el
from .errors import ResourceError, ShapeError
from .first_order import _tangents
from .second_order import (HessianResult, SweepAudit, _create, _independent_block, _push,
                           _row_neighbours, _rows_bad, _rows_nonempty_from)
from .sparse_sym import SymSparseMat, _add, _empty, _release
from .tape import Tape, ValueTrace, check_direction, check_trace

DEFAULT_DENSE_CAP = 10**7
DENSE_CAP_ENV = "HOTAD_DENSE_CAP"


@njit(cache=True)
def _connect(Wh, Wl, Wn, Ww, r, Th, Tl, Tc, Tm, Tn, Tw,
             j0, j1, g0, g1, h00, h01, h11, mask2, vi, dot):
    d0 = dot[j0]
    d1 = dot[j1] if j1 >= 0 else 0.0
    s0 = h00 * d0 + h01 * d1
    s1 = h01 * d0 + h11 * d1
    h = Wh[r]
    if h < 0:
        return Tn, Tw
    for q in range(Wl[r]):
        k = Wn[h + q]
        w = Ww[h + q]
        if k == r:
            Tn, Tw = _add(Th, Tl, Tc, Tm, Tn, Tw, j0, j0, w * (2.0 * g0 * s0 + vi * h00))
            if j1 >= 0:
                Tn, Tw = _add(Th, Tl, Tc, Tm, Tn, Tw, j0, j1,
                              w * (g0 * s1 + g1 * s0 + vi * h01))
                Tn, Tw = _add(Th, Tl, Tc, Tm, Tn, Tw, j1, j1, w * (2.0 * g1 * s1 + vi * h11))
        else:
            if j0 == k:
                Tn, Tw = _add(Th, Tl, Tc, Tm, Tn, Tw, k, k, 2.0 * w * s0)
            else:
                Tn, Tw = _add(Th, Tl, Tc, Tm, Tn, Tw, j0, k, w * s0)
            if j1 >= 0:
                if j1 == k:
                    Tn, Tw = _add(Th, Tl, Tc, Tm, Tn, Tw, k, k, 2.0 * w * s1)
                else:
                    Tn, Tw = _add(Th, Tl, Tc, Tm, Tn, Tw, j1, k, w * s1)
            Tn, Tw = _create(Th, Tl, Tc, Tm, Tn, Tw, j0, j1, w * dot[k], h00, h01, h11, mask2)
    return Tn, Tw


@njit(cache=True)
def _rev_hedir(op, a0, a1, cst, vals, dot, debug):
    N = vals.shape[0]
    n = N - op.shape[0]
    bar = np.zeros(N)
    bar[N - 1] = 1.0
    Wh, Wl, Wc, Wm, Wn, Ww = _empty(N, 4 * n)
    Th, Tl, Tc, Tm, Tn, Tw = _empty(N, 4 * n)
    audit = np.zeros(2, np.int64)
    wbuf = np.empty(16, np.int64)
    tbuf = np.empty(16, np.int64)
    nw = 0
    nt = 0
    for t in range(op.shape[0] - 1, -1, -1):
        r = n + t
        o = op[t]
        j0 = a0[t]
        j1 = a1[t]
        y = vals[j1] if j1 >= 0 else 0.0
        p = el.partials(o, vals[j0], y, cst[t])
        g0 = p[1]
        g1 = p[2]
        bi = bar[r]
        m2 = el.D2_MASK[o]
        m3 = el.D3_MASK[o]
        if debug:
            wbuf, nw = _row_neighbours(Wh, Wl, Wn, r, wbuf)
            tbuf, nt = _row_neighbours(Th, Tl, Tn, r, tbuf)
        # (a) pushing in Td
        Tn, Tw = _push(Th, Tl, Tc, Tm, Tn, Tw, r, j0, j1, g0, g1)
        # (b) connecting W into Td
        if m2 != 0:
            Tn, Tw = _connect(Wh, Wl, Wn, Ww, r, Th, Tl, Tc, Tm, Tn, Tw,
                              j0, j1, g0, g1, p[3], p[4], p[5], m2, dot[r], dot)
        # (c) third-order creating
        if m3 != 0:
            d0 = dot[j0]
            d1 = dot[j1] if j1 >= 0 else 0.0
            u00 = p[6] * d0 + p[7] * d1
            u01 = p[7] * d0 + p[8] * d1
            u11 = p[8] * d0 + p[9] * d1
            mask = 0
            if m3 & 3:
                mask |= 1
            if m3 & 6:
                mask |= 2
            if m3 & 12:
                mask |= 4
            Tn, Tw = _create(Th, Tl, Tc, Tm, Tn, Tw, j0, j1, bi, u00, u01, u11, mask)
        # (d) pushing and creating in W
        Wn, Ww = _push(Wh, Wl, Wc, Wm, Wn, Ww, r, j0, j1, g0, g1)
        Wn, Ww = _create(Wh, Wl, Wc, Wm, Wn, Ww, j0, j1, bi, p[3], p[4], p[5], m2)
        # (e) adjoints
        bar[j0] += bi * g0
        if j1 >= 0:
            bar[j1] += bi * g1
        _release(Wh, Wl, Wc, Wm, Wn, r)
        _release(Th, Tl, Tc, Tm, Tn, r)
        if debug:
            audit[0] += _rows_bad(Wh, Wl, Wn, j0, j1, wbuf, nw)
            audit[0] += _rows_bad(Th, Tl, Tn, j0, j1, wbuf, nw)
            audit[0] += _rows_bad(Th, Tl, Tn, j0, j1, tbuf, nt)
            audit[1] += _rows_nonempty_from(Wl, r) + _rows_nonempty_from(Tl, r)
    return bar, (Wh, Wl, Wc, Wm, Wn, Ww), (Th, Tl, Tc, Tm, Tn, Tw), audit


@dataclass
class TensorVecResult:
    """``Td = D^3 f . d`` together with the Hessian and gradient from the same sweep."""

    Td: SymSparseMat
    W: SymSparseMat
    gradient: np.ndarray
    audit: SweepAudit | None = None

    def dense(self) -> np.ndarray:
        return self.Td.to_dense()

    @property
    def hessian(self) -> HessianResult:
        return HessianResult(self.W, self.gradient, self.audit)


def rev_hedir(tape: Tape, trace: ValueTrace, d, debug: bool = False) -> TensorVecResult:
    """Third derivative of ``f`` contracted with ``d``, as a sparse symmetric matrix over ``1..n``.

    With ``debug`` the sweep also checks row canonicity after every node,
    that rows ``>= i`` are empty once node ``i`` is done, and that the final
    pattern of ``Td`` is contained in that of ``W``.
    """
    check_trace(tape, trace)
    d = check_direction(tape, d)
    dot = np.empty(tape.dim)
    dot[:tape.n] = d
    _tangents(tape.op, tape.arg0, tape.arg1, tape.const, trace.values, dot)
    bar, wstate, tstate, audit = _rev_hedir(tape.op, tape.arg0, tape.arg1, tape.const,
                                            trace.values, dot, bool(debug))
    W = _independent_block(wstate, tape.n)
    Td = _independent_block(tstate, tape.n)
    rep = None
    if debug:
        rep = SweepAudit(int(audit[0]), int(audit[1]), Td.pattern_missing_from(W))
    return TensorVecResult(Td, W, bar[:tape.n].copy(), rep)


# -- dense reference ----------------------------------------------------------

class DenseTensor3:
    """Symmetric third-derivative tensor over ``1..n``; ``T[j, k, m]`` uses 1-based indices."""

    def __init__(self, array: np.ndarray, hessian: np.ndarray | None = None,
                 gradient: np.ndarray | None = None):
        if array.ndim != 3 or len(set(array.shape)) != 1:
            raise ShapeError(f"expected a cubic array, got shape {array.shape}")
        self.array = array
        self.hessian = hessian
        self.gradient = gradient

    @property
    def n(self) -> int:
        return self.array.shape[0]

    def __getitem__(self, jkm) -> float:
        j, k, m = jkm
        for i in jkm:
            if not 1 <= i <= self.n:
                raise IndexError(f"index {i} outside 1..{self.n}")
        return float(self.array[j - 1, k - 1, m - 1])

    def is_symmetric(self) -> bool:
        a = self.array
        return all(np.array_equal(a, a.transpose(p))
                   for p in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)))

    def contract(self, d) -> np.ndarray:
        return contract(self, d)


def contract(T: DenseTensor3 | np.ndarray, d) -> np.ndarray:
    """``sum_m T[j, k, m] d_m``, exactly symmetric in ``(j, k)``."""
    a = T.array if isinstance(T, DenseTensor3) else np.asarray(T, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if a.ndim != 3 or d.shape != (a.shape[2],):
        raise ShapeError(f"cannot contract tensor {a.shape} with vector {d.shape}")
    m = a @ d
    lower = np.tril(m)
    return lower + np.tril(m, -1).T


def dense_cap(cap: int | None = None) -> int:
    if cap is not None:
        return int(cap)
    env = os.environ.get(DENSE_CAP_ENV)
    return int(float(env)) if env else DEFAULT_DENSE_CAP


def live_slots(tape: Tape) -> tuple[np.ndarray, int]:
    """Assign each variable a slot for the span of the reverse sweep in which it is live.

    A variable is live from the moment its last consumer is processed until the
    variable itself is processed; independents stay live to the end.  Returns
    the slot of every storage position (``-1`` for variables that never become
    live) and the number of slots needed.
    """
    n = tape.n
    slot = np.full(tape.dim, -1, np.int64)
    free: list[int] = []
    top = 0

    def take() -> int:
        nonlocal top
        if free:
            return free.pop()
        top += 1
        return top - 1

    slot[tape.dim - 1] = take()
    # the per-node loop stays in Python: this only runs on the small reference problems
    a0 = tape.arg0.tolist()
    a1 = tape.arg1.tolist()
    for t in range(tape.n_nodes - 1, -1, -1):
        r = n + t
        if slot[r] < 0:
            continue
        for j in (a0[t], a1[t]):
            if j >= 0 and slot[j] < 0:
                slot[j] = take()
        free.append(int(slot[r]))
    return slot, top


def _push_mode(T: np.ndarray, axis: int, si: int, P, g) -> None:
    v = np.moveaxis(T, axis, 0)
    Ti = v[si].copy()
    v[si] = 0.0
    for s, gs in zip(P, g):
        v[s] += gs * Ti


def reverse_tensor_dense(tape: Tape, trace: ValueTrace, cap: int | None = None) -> DenseTensor3:
    """Full third-derivative tensor of ``f`` by a dense third-order reverse sweep.

    Memory is ``S^3`` doubles, ``S`` being the peak number of live variables;
    :class:`ResourceError` is raised when ``S^3`` exceeds ``cap`` (default
    ``10**7``, overridable through the ``HOTAD_DENSE_CAP`` environment variable).
    """
    check_trace(tape, trace)
    n = tape.n
    slot, S = live_slots(tape)
    limit = dense_cap(cap)
    if S**3 > limit:
        raise ResourceError(f"dense tensor needs {S}^3 = {S**3} entries, cap is {limit}")
    vals = trace.values
    T = np.zeros((S, S, S))
    W = np.zeros((S, S))
    bar = np.zeros(tape.dim)
    bar[-1] = 1.0
    for t in range(tape.n_nodes - 1, -1, -1):
        r = n + t
        si = int(slot[r])
        if si < 0:
            continue
        j0, j1 = int(tape.arg0[t]), int(tape.arg1[t])
        x = vals[j0]
        y = vals[j1] if j1 >= 0 else 0.0
        p = el.partials(tape.op[t], x, y, tape.const[t])
        bi = bar[r]
        if j1 >= 0:
            P = [int(slot[j0]), int(slot[j1])]
            g = np.array([p[1], p[2]])
            H = np.array([[p[3], p[4]], [p[4], p[5]]])
            D3 = np.empty((2, 2, 2))
            for a in range(2):
                for b in range(2):
                    for c in range(2):
                        D3[a, b, c] = p[6 + a + b + c]
        else:
            P = [int(slot[j0])]
            g = np.array([p[1]])
            H = np.array([[p[3]]])
            D3 = np.array([[[p[6]]]])
        for axis in range(3):
            _push_mode(T, axis, si, P, g)
        c = W[:, si].copy()
        c[si] = 0.0
        c[P] += W[si, si] * g
        Pi = np.ix_(P, P)
        T[np.ix_(range(S), P, P)] += c[:, None, None] * H[None, :, :]
        T[np.ix_(P, P, range(S))] += H[:, :, None] * c[None, None, :]
        T[np.ix_(P, range(S), P)] += H[:, None, :] * c[None, :, None]
        T[np.ix_(P, P, P)] += bi * D3
        Wi = W[si].copy()
        W[si] = 0.0
        for s, gs in zip(P, g):
            W[s] += gs * Wi
        Wi = W[:, si].copy()
        W[:, si] = 0.0
        for s, gs in zip(P, g):
            W[:, s] += gs * Wi
        W[Pi] += bi * H
        bar[j0] += bi * p[1]
        if j1 >= 0:
            bar[j1] += bi * p[2]
    ind = slot[:n]
    out = np.zeros((n, n, n))
    hess = np.zeros((n, n))
    live = np.flatnonzero(ind >= 0)
    if live.size:
        s = ind[live]
        out[np.ix_(live, live, live)] = T[np.ix_(s, s, s)]
        hess[np.ix_(live, live)] = W[np.ix_(s, s)]
    return DenseTensor3(_symmetrize_exact(out), hess, bar[:n].copy())


def _symmetrize_exact(a: np.ndarray) -> np.ndarray:
    """Copy each entry from its sorted-index representative."""
    n = a.shape[0]
    j, k, m = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    s = np.sort(np.stack([j, k, m]), axis=0)
    return a[s[0], s[1], s[2]]
