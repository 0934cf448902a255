"""Finite-difference oracles, independent of the derivative sweeps they check.

Each oracle differentiates one order lower by central differences:
``f`` for the gradient, the reverse gradient for the Hessian, and the sparse
Hessian for the tensor-vector product.  Steps scale with ``1 + max|x|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, OracleDomainError
from .first_order import reverse_gradient
from .second_order import edge_pushing
from .tape import Tape, check_direction, eval_forward

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class FDConfig:
    """Relative step sizes; the absolute step is ``rel * (1 + max|x|)``."""

    gradient_step: float = EPS ** 0.5
    hessian_step: float = EPS ** (1 / 3)
    tensor_step: float = EPS ** (1 / 3)


DEFAULT = FDConfig()


def _step(rel: float, x: np.ndarray) -> float:
    return rel * (1.0 + float(np.max(np.abs(x), initial=0.0)))


def _trace(tape: Tape, x: np.ndarray):
    try:
        return eval_forward(tape, x)
    except EvaluationError as exc:
        raise OracleDomainError(f"finite-difference probe left the domain: {exc}") from exc


def _point(tape: Tape, x) -> np.ndarray:
    return check_direction(tape, x).copy()


def fd_gradient(tape: Tape, x, config: FDConfig = DEFAULT) -> np.ndarray:
    x = _point(tape, x)
    h = _step(config.gradient_step, x)
    g = np.empty(tape.n)
    for j in range(tape.n):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        g[j] = (_trace(tape, xp).f - _trace(tape, xm).f) / (2 * h)
    return g


def fd_hessian(tape: Tape, x, config: FDConfig = DEFAULT) -> np.ndarray:
    """Column ``k`` is the central difference of the gradient along ``e_k``; not symmetrized."""
    x = _point(tape, x)
    h = _step(config.hessian_step, x)
    H = np.empty((tape.n, tape.n))
    for k in range(tape.n):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        gp = reverse_gradient(tape, _trace(tape, xp))
        gm = reverse_gradient(tape, _trace(tape, xm))
        H[:, k] = (gp - gm) / (2 * h)
    return H


def fd_tensor_vec(tape: Tape, x, d, config: FDConfig = DEFAULT) -> np.ndarray:
    """Directional difference of the Hessian along ``d``."""
    x = _point(tape, x)
    d = check_direction(tape, d)
    h = _step(config.tensor_step, x)
    Hp = edge_pushing(tape, _trace(tape, x + h * d)).dense()
    Hm = edge_pushing(tape, _trace(tape, x - h * d)).dense()
    return (Hp - Hm) / (2 * h)


def rel_err(a, b) -> float:
    """``max |a - b| / (1 + max(|a|, |b|))`` over all entries; 0 for empty inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    scale = 1.0 + np.maximum(np.abs(a), np.abs(b))
    return float(np.max(np.abs(a - b) / scale))
