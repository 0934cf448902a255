"""Symmetric sparse matrix stored as sorted weighted neighbourhood lists.

Entry ``{j, k}`` lives once, in the list of row ``max(j, k)`` under neighbour
``min(j, k)`` (lower triangle).  Each row list is a block in a shared pool,
kept sorted by neighbour, with insertion by binary search.  Blocks have
power-of-two capacity and move to a block twice the size when full.  Released
blocks go on per-size free lists so the sweeps can drop a row once it is
consumed.

The module-level ``_``-prefixed functions are numba kernels shared with the
sweeps; they take the matrix state as plain arrays:

    head   int64[dim]   pool offset of the row block, -1 if the row is empty
    length int32[dim]   entries in the row
    cls    int8[dim]    log2 of the block capacity
    meta   int64[...]   meta[0] = pool top, meta[1 + c] = free-list head for class c
    nbr    int32[pool]  neighbour indices (free blocks keep the next pointer here)
    wt     float64[pool] weights
"""
from __future__ import annotations

import io
from typing import Iterator

import numpy as np
from numba import njit

from .errors import BoundsError

MIN_CLS = 1
MAX_CLS = 40


@njit(cache=True)
def _alloc(meta, nbr, wt, c):
    f = meta[1 + c]
    if f >= 0:
        meta[1 + c] = nbr[f]
        return f, nbr, wt
    size = 1 << c
    top = meta[0]
    if top + size > nbr.shape[0]:
        cap = max(2 * nbr.shape[0], top + size)
        if cap >= 2**31 - 1:
            raise MemoryError("sparse pool exceeds 32-bit offsets")
        nbr2 = np.empty(cap, np.int32)
        wt2 = np.empty(cap, np.float64)
        nbr2[:top] = nbr[:top]
        wt2[:top] = wt[:top]
        nbr = nbr2
        wt = wt2
    meta[0] = top + size
    return top, nbr, wt


@njit(cache=True)
def _empty(dim, capacity):
    head = np.full(dim, -1, np.int64)
    length = np.zeros(dim, np.int32)
    cls = np.zeros(dim, np.int8)
    meta = np.full(1 + MAX_CLS, -1, np.int64)
    meta[0] = 0
    cap = max(capacity, 2)
    return head, length, cls, meta, np.empty(cap, np.int32), np.empty(cap, np.float64)


@njit(cache=True)
def _free(meta, nbr, off, c):
    nbr[off] = meta[1 + c]
    meta[1 + c] = off


@njit(cache=True)
def _release(head, length, cls, meta, nbr, r):
    h = head[r]
    if h >= 0:
        _free(meta, nbr, h, cls[r])
        head[r] = -1
        length[r] = 0


@njit(cache=True)
def _add(head, length, cls, meta, nbr, wt, j, k, delta):
    """``M{j,k} += delta``, creating the entry if absent.  Returns the (possibly regrown) pool."""
    if j < k:
        j, k = k, j
    h = head[j]
    if h < 0:
        off, nbr, wt = _alloc(meta, nbr, wt, MIN_CLS)
        head[j] = off
        cls[j] = MIN_CLS
        length[j] = 1
        nbr[off] = k
        wt[off] = delta
        return nbr, wt
    L = length[j]
    if nbr[h + L - 1] < k:
        lo = L
    else:
        lo = 0
        hi = L
        while lo < hi:
            mid = (lo + hi) >> 1
            if nbr[h + mid] < k:
                lo = mid + 1
            else:
                hi = mid
        if nbr[h + lo] == k:
            wt[h + lo] += delta
            return nbr, wt
    if L == (1 << cls[j]):
        c = cls[j] + 1
        off, nbr, wt = _alloc(meta, nbr, wt, c)
        for q in range(L):
            nbr[off + q] = nbr[h + q]
            wt[off + q] = wt[h + q]
        _free(meta, nbr, h, cls[j])
        head[j] = off
        cls[j] = c
        h = off
    for q in range(L, lo, -1):
        nbr[h + q] = nbr[h + q - 1]
        wt[h + q] = wt[h + q - 1]
    nbr[h + lo] = k
    wt[h + lo] = delta
    length[j] = L + 1
    return nbr, wt


@njit(cache=True)
def _find(head, length, nbr, j, k):
    """Pool offset of entry ``{j,k}`` or -1."""
    if j < k:
        j, k = k, j
    h = head[j]
    if h < 0:
        return -1
    lo = 0
    hi = length[j]
    while lo < hi:
        mid = (lo + hi) >> 1
        if nbr[h + mid] < k:
            lo = mid + 1
        else:
            hi = mid
    if lo < length[j] and nbr[h + lo] == k:
        return h + lo
    return -1


@njit(cache=True)
def _nnz(head, length, nbr, wt, r0, r1):
    count = 0
    for r in range(r0, r1):
        h = head[r]
        if h < 0:
            continue
        for q in range(length[r]):
            if wt[h + q] != 0.0:
                count += 1 if nbr[h + q] == r else 2
    return count


@njit(cache=True)
def _row_ok(head, length, nbr, r):
    """Row invariant: strictly ascending neighbours, none above the row."""
    h = head[r]
    if h < 0:
        return length[r] == 0
    prev = -1
    for q in range(length[r]):
        k = nbr[h + q]
        if k <= prev or k > r:
            return False
        prev = k
    return True


@njit(cache=True)
def _compact(head, length, nbr, wt, r0, r1):
    """Copy rows ``r0..r1-1`` (neighbours >= r0) into a fresh pool, rebased to 0."""
    m = r1 - r0
    nhead = np.full(m, -1, np.int64)
    nlen = np.zeros(m, np.int32)
    ncls = np.zeros(m, np.int8)
    total = 0
    for r in range(r0, r1):
        h = head[r]
        keep = 0
        if h >= 0:
            for q in range(length[r]):
                if nbr[h + q] >= r0:
                    keep += 1
        if keep:
            c = MIN_CLS
            while (1 << c) < keep:
                c += 1
            ncls[r - r0] = c
            nlen[r - r0] = keep
            nhead[r - r0] = total
            total += 1 << c
    nnbr = np.empty(max(total, 2), np.int32)
    nwt = np.empty(max(total, 2), np.float64)
    for r in range(r0, r1):
        o = nhead[r - r0]
        if o < 0:
            continue
        h = head[r]
        p = 0
        for q in range(length[r]):
            if nbr[h + q] >= r0:
                nnbr[o + p] = nbr[h + q] - r0
                nwt[o + p] = wt[h + q]
                p += 1
    meta = np.full(1 + MAX_CLS, -1, np.int64)
    meta[0] = total
    return nhead, nlen, ncls, meta, nnbr, nwt


@njit(cache=True)
def _pattern_subset(ah, al, an, bh, bl, bn, r0, r1):
    """Number of entries stored in rows r0..r1-1 of A but absent from B."""
    missing = 0
    for r in range(r0, r1):
        h = ah[r]
        if h < 0:
            continue
        for q in range(al[r]):
            if _find(bh, bl, bn, r, an[h + q]) < 0:
                missing += 1
    return missing


class SymSparseMat:
    """Symmetric sparse matrix over logical indices ``base .. base+dim-1``.

    >>> m = SymSparseMat(3, base=1)
    >>> m.increment(1, 2, 0.5)
    >>> m.get(2, 1)
    0.5
    """

    def __init__(self, dim: int, base: int = 0, capacity: int = 64):
        self.dim = int(dim)
        self.base = int(base)
        (self.head, self.length, self.cls, self.meta,
         self.nbr, self.wt) = _empty(self.dim, int(capacity))

    @classmethod
    def _from_state(cls, state, base: int) -> "SymSparseMat":
        m = cls.__new__(cls)
        m.head, m.length, m.cls, m.meta, m.nbr, m.wt = state
        m.dim = len(m.head)
        m.base = int(base)
        return m

    def _state(self):
        return self.head, self.length, self.cls, self.meta, self.nbr, self.wt

    def _pos(self, i: int) -> int:
        r = int(i) - self.base
        if not 0 <= r < self.dim:
            raise BoundsError(f"index {i} outside {self.base}..{self.base + self.dim - 1}")
        return r

    @property
    def indices(self) -> range:
        return range(self.base, self.base + self.dim)

    def increment(self, j: int, k: int, delta: float) -> None:
        rj, rk = self._pos(j), self._pos(k)
        self.nbr, self.wt = _add(self.head, self.length, self.cls, self.meta,
                                 self.nbr, self.wt, rj, rk, float(delta))

    def get(self, j: int, k: int) -> float:
        off = _find(self.head, self.length, self.nbr, self._pos(j), self._pos(k))
        return 0.0 if off < 0 else float(self.wt[off])

    def __getitem__(self, jk) -> float:
        return self.get(*jk)

    def contains(self, j: int, k: int) -> bool:
        """True if ``{j,k}`` is stored, even with weight zero."""
        return _find(self.head, self.length, self.nbr, self._pos(j), self._pos(k)) >= 0

    def iterate_row(self, i: int) -> list[tuple[int, float]]:
        """Stored neighbours ``k <= i`` of ``i`` in ascending order."""
        r = self._pos(i)
        h = self.head[r]
        if h < 0:
            return []
        L = self.length[r]
        ks = self.nbr[h:h + L].astype(np.int64) + self.base
        return list(zip(ks.tolist(), self.wt[h:h + L].tolist()))

    def entries(self) -> Iterator[tuple[int, int, float]]:
        """All stored entries ``(j, k, w)`` with ``j >= k``, ascending in ``(j, k)``."""
        for j in self.indices:
            for k, w in self.iterate_row(j):
                yield j, k, w

    def pattern(self, nonzero: bool = False) -> set[tuple[int, int]]:
        return {(j, k) for j, k, w in self.entries() if not nonzero or w != 0.0}

    def stored(self) -> int:
        """Number of stored lower-triangle entries, zeros included."""
        return int(self.length.sum())

    def nnz(self) -> int:
        """Nonzeros of the full symmetric matrix; exact-zero weights are not counted."""
        return int(_nnz(self.head, self.length, self.nbr, self.wt, 0, self.dim))

    def rows_valid(self) -> bool:
        return all(_row_ok(self.head, self.length, self.nbr, r) for r in range(self.dim))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.dim, self.dim))
        for r in range(self.dim):
            h = self.head[r]
            if h < 0:
                continue
            L = self.length[r]
            ks = self.nbr[h:h + L]
            a[r, ks] = self.wt[h:h + L]
            a[ks, r] = self.wt[h:h + L]
        return a

    def restrict_to_independents(self, n: int) -> "SymSparseMat":
        """Submatrix over logical indices ``1-n .. 0``, reindexed ``1 .. n``."""
        r0 = self._pos(1 - n)
        self._pos(0)
        state = _compact(self.head, self.length, self.nbr, self.wt, r0, r0 + n)
        return SymSparseMat._from_state(state, base=1)

    def pattern_missing_from(self, other: "SymSparseMat") -> int:
        """Count stored entries of ``self`` that ``other`` does not store."""
        if other.dim != self.dim or other.base != self.base:
            raise BoundsError("matrices have different index ranges")
        return int(_pattern_subset(self.head, self.length, self.nbr,
                                   other.head, other.length, other.nbr, 0, self.dim))

    def to_csv(self) -> str:
        """Lower triangle as ``j,k,weight`` rows, ascending in ``(j, k)``."""
        buf = io.StringIO()
        buf.write("j,k,weight\n")
        for j, k, w in self.entries():
            buf.write(f"{j},{k},{w!r}\n")
        return buf.getvalue()

    def __repr__(self) -> str:
        return f"SymSparseMat(dim={self.dim}, base={self.base}, stored={self.stored()})"
