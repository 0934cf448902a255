"""Scalable test functions, generated directly as tapes.

Each generator writes the node arrays in a compiled loop, so a tape with tens
of millions of nodes is built without per-node Python objects.  Index
conventions follow the usual 1-based statement of each function; ``x_i``
lives at storage position ``i - 1``.

=============  ===============================================================  ==========
name           f(x)                                                             Td pattern
=============  ===============================================================  ==========
heavey_band    sum_{i=1}^{n-b} sin(sum_{j=1}^{b} x_{i+j})                       band 2b-1
cosine         sum_{i=1}^{n-1} cos(x_i^2 - x_{i+1}/2)                           band 3
chainwood      1 + sum over odd i <= n-3 of the chained Wood terms              band 3
arwhead        sum_{i=1}^{n-1} (x_i^2 + x_n^2)^2 - 4 x_i + 3                    arrow
sinquad        (x_1-1)^4 + sum_{i=2}^{n-1} (sin(x_i-x_n) - x_1^2 + x_i^2)^2
               + (x_n^2 - x_1^2)^2                                              frame
brybnd         sum_i (x_i (2 + 5 x_i^2) + 1 - sum_{j in J_i} x_j (1 + x_j))^2   band 13
bdexp          sum_{i=1}^{n-2} (x_i + x_{i+1}) exp(-x_{i+2} (x_i + x_{i+1}))     band 5
quadratic      sum_i x_i^2 + sum_i x_i x_{i+1}                                  empty
toy_xysinz     x_1 x_2 sin(x_3)                                                 dense
=============  ===============================================================  ==========

``J_i = {max(1, i-5), .., min(n, i+1)} \\ {i}`` for brybnd.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from . import elementals as el
from .errors import ParameterError, UnknownProblemError
from .tape import Tape, eval_forward
from .third_order import rev_hedir

DEFAULT_BAND = 20


@dataclass(frozen=True)
class Pattern:
    """Where ``D^3 f . d`` may have nonzeros.

    ``kind`` is one of ``band`` (``|j-k| <= half_width``), ``arrow`` (diagonal
    plus last row/column), ``frame`` (diagonal plus first and last
    rows/columns), ``empty`` or ``dense``.
    """

    kind: str
    half_width: int = 0

    def allows(self, j: int, k: int, n: int) -> bool:
        if self.kind == "band":
            return abs(j - k) <= self.half_width
        if self.kind == "arrow":
            return j == k or j == n or k == n
        if self.kind == "frame":
            return j == k or j in (1, n) or k in (1, n)
        if self.kind == "dense":
            return True
        return False

    def __str__(self) -> str:
        if self.kind == "band":
            return f"B{2 * self.half_width + 1}"
        return self.kind


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    params: dict = field(default_factory=dict)

    @property
    def band(self) -> int | None:
        return self.params.get("band")

    @property
    def expected_pattern(self) -> Pattern:
        return REGISTRY[self.name].pattern(self)


# -- compiled emitters ----------------------------------------------------------

@njit(cache=True)
def _put(op, a0, a1, cst, k, code, x, y, c):
    op[k] = code
    a0[k] = x
    a1[k] = y
    cst[k] = c
    return k + 1


@njit(cache=True)
def _arrays(size):
    return (np.empty(size, np.int8), np.empty(size, np.int32),
            np.empty(size, np.int32), np.zeros(size, np.float64))


@njit(cache=True)
def _accumulate(op, a0, a1, cst, k, n, acc, term):
    """Add ``term`` into the running sum at position ``acc`` (-1 if empty)."""
    if acc < 0:
        return k, term
    k = _put(op, a0, a1, cst, k, el.ADD, acc, term, 0.0)
    return k, n + k - 1


@njit(cache=True)
def _emit_heavey_band(n, band):
    windows = n - band
    size = windows * band + windows - 1
    op, a0, a1, cst = _arrays(size)
    k = 0
    acc = -1
    for i in range(1, windows + 1):
        s = i  # position of x_{i+1}
        for j in range(2, band + 1):
            k = _put(op, a0, a1, cst, k, el.ADD, s, i + j - 1, 0.0)
            s = n + k - 1
        k = _put(op, a0, a1, cst, k, el.SIN, s, -1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    return op, a0, a1, cst


@njit(cache=True)
def _emit_cosine(n):
    size = 4 * (n - 1) + (n - 2)
    op, a0, a1, cst = _arrays(size)
    k = 0
    acc = -1
    for i in range(n - 1):
        k = _put(op, a0, a1, cst, k, el.SQUARE, i, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SCALE, i + 1, -1, -0.5)
        k = _put(op, a0, a1, cst, k, el.ADD, n + k - 2, n + k - 1, 0.0)
        k = _put(op, a0, a1, cst, k, el.COS, n + k - 1, -1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    return op, a0, a1, cst


@njit(cache=True)
def _emit_chainwood(n):
    groups = (n - 2) // 2
    size = groups * 24 + groups - 1 + 1
    op, a0, a1, cst = _arrays(size)
    k = 0
    acc = -1
    for i in range(0, 2 * groups, 2):
        x1, x2, x3, x4 = i, i + 1, i + 2, i + 3
        # 100 (x2 - x1^2)^2
        k = _put(op, a0, a1, cst, k, el.SQUARE, x1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SUB, x2, n + k - 1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SCALE, n + k - 1, -1, 100.0)
        t = n + k - 1
        # (1 - x1)^2
        k = _put(op, a0, a1, cst, k, el.ADDC, x1, -1, -1.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.ADD, t, n + k - 1, 0.0)
        t = n + k - 1
        # 90 (x4 - x3^2)^2
        k = _put(op, a0, a1, cst, k, el.SQUARE, x3, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SUB, x4, n + k - 1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SCALE, n + k - 1, -1, 90.0)
        k = _put(op, a0, a1, cst, k, el.ADD, t, n + k - 1, 0.0)
        t = n + k - 1
        # (1 - x3)^2
        k = _put(op, a0, a1, cst, k, el.ADDC, x3, -1, -1.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.ADD, t, n + k - 1, 0.0)
        t = n + k - 1
        # 10 (x2 + x4 - 2)^2
        k = _put(op, a0, a1, cst, k, el.ADD, x2, x4, 0.0)
        k = _put(op, a0, a1, cst, k, el.ADDC, n + k - 1, -1, -2.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SCALE, n + k - 1, -1, 10.0)
        k = _put(op, a0, a1, cst, k, el.ADD, t, n + k - 1, 0.0)
        t = n + k - 1
        # 0.1 (x2 - x4)^2
        k = _put(op, a0, a1, cst, k, el.SUB, x2, x4, 0.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SCALE, n + k - 1, -1, 0.1)
        k = _put(op, a0, a1, cst, k, el.ADD, t, n + k - 1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    k = _put(op, a0, a1, cst, k, el.ADDC, acc, -1, 1.0)
    return op, a0, a1, cst


@njit(cache=True)
def _emit_arwhead(n):
    size = 1 + 5 * (n - 1) + (n - 2) + 1
    op, a0, a1, cst = _arrays(size)
    k = _put(op, a0, a1, cst, 0, el.SQUARE, n - 1, -1, 0.0)
    sqn = n + k - 1
    acc = -1
    for i in range(n - 1):
        k = _put(op, a0, a1, cst, k, el.SQUARE, i, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.ADD, n + k - 1, sqn, 0.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SCALE, i, -1, -4.0)
        k = _put(op, a0, a1, cst, k, el.ADD, n + k - 2, n + k - 1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    k = _put(op, a0, a1, cst, k, el.ADDC, acc, -1, 3.0 * (n - 1))
    return op, a0, a1, cst


@njit(cache=True)
def _emit_sinquad(n):
    size = 3 + 6 * (n - 2) + 3 + n - 1
    op, a0, a1, cst = _arrays(size)
    k = _put(op, a0, a1, cst, 0, el.SQUARE, 0, -1, 0.0)
    sq1 = n + k - 1
    k = _put(op, a0, a1, cst, k, el.ADDC, 0, -1, -1.0)
    k = _put(op, a0, a1, cst, k, el.POWI, n + k - 1, -1, 4.0)
    acc = n + k - 1
    for i in range(1, n - 1):
        k = _put(op, a0, a1, cst, k, el.SUB, i, n - 1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SIN, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SUB, n + k - 1, sq1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, i, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.ADD, n + k - 2, n + k - 1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    k = _put(op, a0, a1, cst, k, el.SQUARE, n - 1, -1, 0.0)
    k = _put(op, a0, a1, cst, k, el.SUB, n + k - 1, sq1, 0.0)
    k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
    k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    return op, a0, a1, cst


@njit(cache=True)
def _brybnd_neighbours(n, i):
    lo = max(0, i - 5)
    hi = min(n - 1, i + 1)
    return lo, hi


@njit(cache=True)
def _emit_brybnd(n):
    size = 2 * n
    for i in range(n):
        lo, hi = _brybnd_neighbours(n, i)
        size += 5 + (hi - lo) + 1 + 1
    size -= 1
    op, a0, a1, cst = _arrays(size)
    k = 0
    # x_j (1 + x_j), shared by every residual that reads x_j
    shared = np.empty(n, np.int64)
    for j in range(n):
        k = _put(op, a0, a1, cst, k, el.ADDC, j, -1, 1.0)
        k = _put(op, a0, a1, cst, k, el.MUL, j, n + k - 1, 0.0)
        shared[j] = n + k - 1
    acc = -1
    for i in range(n):
        k = _put(op, a0, a1, cst, k, el.SQUARE, i, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.SCALE, n + k - 1, -1, 5.0)
        k = _put(op, a0, a1, cst, k, el.ADDC, n + k - 1, -1, 2.0)
        k = _put(op, a0, a1, cst, k, el.MUL, i, n + k - 1, 0.0)
        k = _put(op, a0, a1, cst, k, el.ADDC, n + k - 1, -1, 1.0)
        lo, hi = _brybnd_neighbours(n, i)
        for j in range(lo, hi + 1):
            if j != i:
                k = _put(op, a0, a1, cst, k, el.SUB, n + k - 1, shared[j], 0.0)
        k = _put(op, a0, a1, cst, k, el.SQUARE, n + k - 1, -1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    return op, a0, a1, cst


@njit(cache=True)
def _emit_bdexp(n):
    size = 5 * (n - 2) + n - 3
    op, a0, a1, cst = _arrays(size)
    k = 0
    acc = -1
    for i in range(n - 2):
        k = _put(op, a0, a1, cst, k, el.ADD, i, i + 1, 0.0)
        s = n + k - 1
        k = _put(op, a0, a1, cst, k, el.MUL, i + 2, s, 0.0)
        k = _put(op, a0, a1, cst, k, el.NEG, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.EXP, n + k - 1, -1, 0.0)
        k = _put(op, a0, a1, cst, k, el.MUL, s, n + k - 1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    return op, a0, a1, cst


@njit(cache=True)
def _emit_quadratic(n):
    size = n + (n - 1) + (2 * n - 2)
    op, a0, a1, cst = _arrays(size)
    k = 0
    acc = -1
    for i in range(n):
        k = _put(op, a0, a1, cst, k, el.SQUARE, i, -1, 0.0)
        k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
        if i + 1 < n:
            k = _put(op, a0, a1, cst, k, el.MUL, i, i + 1, 0.0)
            k, acc = _accumulate(op, a0, a1, cst, k, n, acc, n + k - 1)
    return op, a0, a1, cst


def _emit_toy(n):
    op = np.array([el.MUL, el.SIN, el.MUL], np.int8)
    a0 = np.array([0, 2, 3], np.int32)
    a1 = np.array([1, -1, 4], np.int32)
    return op, a0, a1, np.zeros(3)


# -- registry -------------------------------------------------------------------

@dataclass(frozen=True)
class _Entry:
    emit: Callable
    min_n: int
    pattern: Callable[[ProblemSpec], Pattern]
    banded: bool = False
    fixed_n: int | None = None
    in_suite: bool = True


def _band(w):
    return lambda spec: Pattern("band", w)


REGISTRY: dict[str, _Entry] = {
    "heavey_band": _Entry(None, 2, lambda s: Pattern("band", s.band - 1), banded=True),
    "cosine": _Entry(_emit_cosine, 3, _band(1)),
    "chainwood": _Entry(_emit_chainwood, 4, _band(1)),
    "arwhead": _Entry(_emit_arwhead, 3, lambda s: Pattern("arrow")),
    "sinquad": _Entry(_emit_sinquad, 3, lambda s: Pattern("frame")),
    "brybnd": _Entry(_emit_brybnd, 2, _band(6)),
    "bdexp": _Entry(_emit_bdexp, 3, _band(2)),
    "quadratic": _Entry(_emit_quadratic, 2, lambda s: Pattern("empty")),
    "toy_xysinz": _Entry(_emit_toy, 3, lambda s: Pattern("dense"), fixed_n=3, in_suite=False),
}


def names() -> list[str]:
    return list(REGISTRY)


def suite_names() -> list[str]:
    """Problems that scale with ``n``; the toy example is fixed at ``n = 3``."""
    return [k for k, e in REGISTRY.items() if e.in_suite]


def default_band(n: int) -> int:
    return DEFAULT_BAND if n > DEFAULT_BAND else n // 2


def problem_spec(name: str, n: int, band: int | None = None) -> ProblemSpec:
    """Validated problem description; ``band`` applies to heavey_band only and defaults by ``n``."""
    if name not in REGISTRY:
        raise UnknownProblemError(f"unknown problem {name!r}; choose from {', '.join(REGISTRY)}")
    entry = REGISTRY[name]
    n = int(n)
    if entry.fixed_n is not None and n != entry.fixed_n:
        raise ParameterError(f"{name} is defined for n = {entry.fixed_n} only")
    if n < entry.min_n:
        raise ParameterError(f"{name} needs n >= {entry.min_n}, got {n}")
    params = {}
    if entry.banded:
        band = default_band(n) if band is None else int(band)
        if not 1 <= band < n:
            raise ParameterError(f"band must satisfy 1 <= band < n, got band={band}, n={n}")
        params["band"] = band
    elif band is not None:
        raise ParameterError(f"{name} takes no band parameter")
    return ProblemSpec(name, n, params)


def make_problem(spec: ProblemSpec | str, n: int | None = None, band: int | None = None) -> Tape:
    """Tape of the named test function.  Same parameters, same tape."""
    if isinstance(spec, str):
        spec = problem_spec(spec, n, band)
    else:
        spec = problem_spec(spec.name, spec.n, spec.band)
    if spec.name == "heavey_band":
        arrays = _emit_heavey_band(spec.n, spec.band)
    else:
        arrays = REGISTRY[spec.name].emit(spec.n)
    return Tape(spec.n, *arrays)


# -- evaluation points ------------------------------------------------------------

def index_point(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``x_i = i`` and ``d_i = 1``."""
    return np.arange(1, n + 1, dtype=np.float64), np.ones(n)


def scaled_point(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``x_i = i / n`` and ``d_i = 1``; keeps exp-type terms finite at large ``n``."""
    return np.arange(1, n + 1, dtype=np.float64) / n, np.ones(n)


def random_point(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Point and direction drawn uniformly from ``[-1, 1]^n``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, n), rng.uniform(-1.0, 1.0, n)


def density(tape: Tape, x, d) -> tuple[int, float]:
    """Nonzeros of ``D^3 f(x) . d`` over the independents, and that count over ``n``."""
    nnz = rev_hedir(tape, eval_forward(tape, x), d).Td.nnz()
    return nnz, nnz / tape.n


def _band_count(m: int, w: int) -> int:
    """Entries with ``|j - k| <= w`` in an ``m x m`` matrix."""
    w = min(w, m - 1)
    return (2 * w + 1) * m - w * (w + 1)


def expected_nnz(spec: ProblemSpec) -> int | None:
    """Closed-form nonzero count of ``D^3 f . d`` at a generic point, where one is known.

    heavey_band fills the band ``|j - k| <= b - 1`` over ``x_2 .. x_n``: every
    such pair lies inside some window.  cosine is tridiagonal over all of ``x``.
    """
    if spec.name == "heavey_band":
        return _band_count(spec.n - 1, spec.band - 1)
    if spec.name == "cosine":
        return _band_count(spec.n, 1)
    if spec.name == "quadratic":
        return 0
    return None
