import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import seeds, usable_case
from hotad.errors import ResourceError, ShapeError
from hotad.oracle import fd_tensor_vec, rel_err
from hotad.recording import record
from hotad.second_order import edge_pushing
from hotad.tape import eval_forward
from hotad.third_order import (DENSE_CAP_ENV, DenseTensor3, contract, live_slots, rev_hedir,
                               reverse_tensor_dense)

TOY_X = [1.0, 2.0, math.pi / 2]
TOY_TD = [[0.0, 0.0, -2.0], [0.0, 0.0, -1.0], [-2.0, -1.0, -3.0]]


def test_toy_tensor_vector(toy):
    res = rev_hedir(toy, eval_forward(toy, TOY_X), [1.0, 1.0, 1.0], debug=True)
    assert rel_err(res.dense(), TOY_TD) <= 1e-12
    assert res.audit.ok
    assert rel_err(res.W.to_dense(), [[0, 1, 0], [1, 0, 0], [0, 0, -2]]) <= 1e-12


def test_toy_dense_tensor(toy):
    T = reverse_tensor_dense(toy, eval_forward(toy, TOY_X))
    assert T.is_symmetric()
    assert T[1, 2, 3] == pytest.approx(math.cos(math.pi / 2), abs=1e-15)
    ref = np.zeros((3, 3, 3))
    c = math.cos(math.pi / 2)
    for p in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        ref[p] = c
    for p in ((0, 2, 2), (2, 0, 2), (2, 2, 0)):
        ref[p] = -2.0  # -x2 sin(x3)
    for p in ((1, 2, 2), (2, 1, 2), (2, 2, 1)):
        ref[p] = -1.0  # -x1 sin(x3)
    ref[2, 2, 2] = -2.0 * c
    assert rel_err(T.array, ref) <= 1e-12


def test_quadratic_tensor_is_empty():
    t = record(lambda x: x[0] * x[0] + x[0] * x[1], n=2)
    res = rev_hedir(t, eval_forward(t, [0.3, -2.0]), [1.0, 5.0])
    assert res.Td.stored() == 0 and res.Td.nnz() == 0


@given(seeds)
def test_tensor_vector_matches_dense_tensor(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, d = case
    tr = eval_forward(tape, x)
    res = rev_hedir(tape, tr, d, debug=True)
    assert res.audit.ok
    assert rel_err(res.dense(), contract(reverse_tensor_dense(tape, tr), d)) <= 1e-12


@given(seeds)
def test_tensor_vector_matches_finite_differences(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, d = case
    res = rev_hedir(tape, eval_forward(tape, x), d)
    assert rel_err(res.dense(), fd_tensor_vec(tape, x, d)) <= 1e-5


@given(seeds)
def test_same_sweep_hessian_and_gradient(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, d = case
    tr = eval_forward(tape, x)
    res = rev_hedir(tape, tr, d)
    ref = edge_pushing(tape, tr)
    assert np.array_equal(res.W.to_dense(), ref.dense())
    assert np.array_equal(res.gradient, ref.gradient)


@given(seeds, st.sampled_from([2.0, 0.25, -4.0]))
def test_linear_in_direction(seed, alpha):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, d = case
    tr = eval_forward(tape, x)
    a = rev_hedir(tape, tr, d).dense()
    b = rev_hedir(tape, tr, alpha * d).dense()
    assert np.array_equal(b, alpha * a)


@given(seeds)
def test_pattern_contained_in_hessian_pattern(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, d = case
    res = rev_hedir(tape, eval_forward(tape, x), d)
    assert res.Td.pattern() <= res.W.pattern()


@given(seeds)
def test_dense_tensor_symmetric_and_consistent(seed):
    case = usable_case(seed)
    assume(case is not None)
    tape, x, _ = case
    tr = eval_forward(tape, x)
    T = reverse_tensor_dense(tape, tr)
    assert T.is_symmetric()
    assert rel_err(T.hessian, edge_pushing(tape, tr).dense()) <= 1e-12


def test_contract_is_exactly_symmetric():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 5, 5))
    m = contract(a, rng.normal(size=5))
    assert np.array_equal(m, m.T)
    with pytest.raises(ShapeError):
        contract(a, np.ones(4))


def test_live_slots_reuse(toy):
    slot, S = live_slots(toy)
    assert S == 4  # peak while node 1 = x1 x2 is processed: x1, x2, x3 and node 1
    assert slot[toy.dim - 1] >= 0


def test_dense_cap(toy, monkeypatch):
    tr = eval_forward(toy, TOY_X)
    with pytest.raises(ResourceError):
        reverse_tensor_dense(toy, tr, cap=10)
    monkeypatch.setenv(DENSE_CAP_ENV, "10")
    with pytest.raises(ResourceError):
        reverse_tensor_dense(toy, tr)
    assert reverse_tensor_dense(toy, tr, cap=1000).n == 3


def test_dense_tensor_indexing():
    T = DenseTensor3(np.zeros((2, 2, 2)))
    assert T[2, 2, 2] == 0.0
    with pytest.raises(IndexError):
        T[0, 1, 1]
    with pytest.raises(ShapeError):
        DenseTensor3(np.zeros((2, 3, 2)))
