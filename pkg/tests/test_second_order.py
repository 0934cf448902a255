import math

import numpy as np
from hypothesis import assume, given

from conftest import seeds, usable_case
from hotad.oracle import fd_hessian, rel_err
from hotad.recording import record, sin
from hotad.second_order import edge_pushing, hessian_vector
from hotad.tape import build, eval_forward

TOY_X = [1.0, 2.0, math.pi / 2]
TOY_H = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0]]


def test_toy_hessian(toy):
    res = edge_pushing(toy, eval_forward(toy, TOY_X), debug=True)
    assert rel_err(res.dense(), TOY_H) <= 1e-12
    assert rel_err(res.gradient, [2.0, 1.0, 0.0]) <= 1e-12
    assert res.audit.ok
    assert res.W.base == 1 and res.W.dim == 3


def test_toy_hessian_vector(toy):
    hv = hessian_vector(toy, eval_forward(toy, TOY_X), [1.0, 1.0, 1.0])
    assert rel_err(hv, [1.0, 1.0, -2.0]) <= 1e-12


def test_quadratic_hessian_is_constant():
    t = record(lambda x: x[0] * x[0] + x[0] * x[1], n=2)
    for x in ([0.0, 0.0], [3.0, -1.0]):
        assert np.array_equal(edge_pushing(t, eval_forward(t, x)).dense(), [[2, 1], [1, 0]])


def test_linear_function_has_empty_hessian():
    t = build([("add", -1, 0), ("scale", 1, 3.0), ("sub", 2, -1)], n=2)
    res = edge_pushing(t, eval_forward(t, [1.0, 2.0]))
    assert res.W.stored() == 0


def test_pushing_through_shared_subexpression():
    # f = sin(x1 * x2)^2 reuses sin(x1 x2) through square
    t = record(lambda x: sin(x[0] * x[1]) ** 2, n=2)
    x = np.array([0.3, 1.1])
    res = edge_pushing(t, eval_forward(t, x), debug=True)
    assert rel_err(res.dense(), fd_hessian(t, x)) <= 1e-6
    assert res.audit.ok


@given(seeds)
def test_hessian_matches_finite_differences(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, _ = case
    res = edge_pushing(tape, eval_forward(tape, x), debug=True)
    assert res.audit.ok
    assert res.W.rows_valid()
    assert rel_err(res.dense(), fd_hessian(tape, x)) <= 1e-5


@given(seeds)
def test_hessian_vector_matches_sparse_hessian(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, d = case
    tr = eval_forward(tape, x)
    assert rel_err(hessian_vector(tape, tr, d), edge_pushing(tape, tr).dense() @ d) <= 1e-12


@given(seeds)
def test_hessian_nonzeros_lie_in_stored_pattern(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, _ = case
    W = edge_pushing(tape, eval_forward(tape, x)).W
    dense = W.to_dense()
    stored = W.pattern()
    for j, k in zip(*np.nonzero(dense)):
        assert (max(j, k) + 1, min(j, k) + 1) in stored
