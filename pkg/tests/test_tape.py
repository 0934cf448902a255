import math

import numpy as np
import pytest
from hypothesis import given

from conftest import random_tape, seeds
from hotad.errors import ArityError, EvaluationError, MalformedTapeError, ShapeError
from hotad.tape import NO_ARG, Tape, TapeBuilder, build, dump_text, eval_forward, parse_text


def toy_program():
    return [("mul", -2, -1), ("sin", 0), ("mul", 2, 1)]


def test_build_and_node_access():
    t = build(toy_program(), n=3)
    assert (t.n_independent, t.n_nodes, t.output_index, t.dim) == (3, 3, 3, 6)
    assert t.preds(1) == (-2, -1)
    assert t.preds(2) == (0,)
    assert [nd.elemental.symbol for nd in t.nodes] == ["mul", "sin", "mul"]
    assert t.node(2).const is None
    with pytest.raises(IndexError):
        t.node(0)
    with pytest.raises(IndexError):
        t.node(4)


def test_index_positions_round_trip():
    t = build(toy_program(), n=3)
    for i in range(-2, 4):
        assert t.index(t.pos(i)) == i
    assert t.pos(-2) == 0 and t.pos(3) == 5


def test_forward_toy():
    t = build(toy_program(), n=3)
    tr = eval_forward(t, [1.0, 2.0, math.pi / 2])
    assert tr.f == 2.0
    assert tr[1] == 2.0 and tr[-2] == 1.0
    assert np.array_equal(tr.independents, [1.0, 2.0, math.pi / 2])
    with pytest.raises(IndexError):
        tr[4]


def test_domain_error_names_node():
    t = build([("addc", 0, -1.0), ("log", 1)], n=1)
    with pytest.raises(EvaluationError) as info:
        eval_forward(t, [1.0])
    assert info.value.node == 2
    assert info.value.symbol == "log"


def test_overflow_is_an_evaluation_error():
    t = build([("exp", 0), ("exp", 1)], n=1)
    with pytest.raises(EvaluationError):
        eval_forward(t, [10.0])


def test_input_shape_checked():
    t = build(toy_program(), n=3)
    with pytest.raises(ShapeError):
        eval_forward(t, [1.0, 2.0])


def test_repeated_operands_fold_to_unary():
    b = TapeBuilder(1)
    b.apply("mul", 0, 0)
    b.apply("add", 1, 1)
    b.apply("sub", 2, 2)
    b.apply("div", 3, 3)
    t = b.seal()
    assert [nd.elemental.symbol for nd in t.nodes] == ["square", "scale", "scale", "powi"]
    assert [nd.const for nd in t.nodes] == [None, 2.0, 0.0, 0.0]
    assert np.all(t.arg1 == NO_ARG)


def test_builder_rejects_bad_operands():
    b = TapeBuilder(2)
    with pytest.raises(MalformedTapeError):
        b.apply("sin", 1)  # forward reference
    with pytest.raises(MalformedTapeError):
        b.apply("sin", -2)  # below the independents
    with pytest.raises(ArityError):
        b.apply("mul", 0)
    with pytest.raises(ArityError):
        b.apply("scale", 0)
    with pytest.raises(ArityError):
        b.apply("sin", 0, const=1.0)
    with pytest.raises(MalformedTapeError):
        b.apply("powi", 0, const=1.5)
    with pytest.raises(MalformedTapeError):
        TapeBuilder(0)


def test_seal_appends_identity_when_output_is_not_last():
    b = TapeBuilder(2)
    a = b.apply("sin", 0)
    b.apply("cos", -1)
    t = b.seal(output=a)
    assert t.n_nodes == 3 and t.preds(3) == (1,)
    t2 = TapeBuilder(2).seal(output=0)
    assert eval_forward(t2, [4.0, 5.0]).f == 5.0


def test_empty_tape_rejected():
    with pytest.raises(MalformedTapeError):
        TapeBuilder(1).seal()


def test_array_validation():
    with pytest.raises(MalformedTapeError):
        Tape(1, [1], [0], [1], [0.0])  # operand is the node itself
    with pytest.raises(ArityError):
        Tape(1, [9], [0], [0], [0.0])  # unary with a second operand
    with pytest.raises(MalformedTapeError):
        Tape(2, [3], [0], [0], [0.0])  # repeated operand
    with pytest.raises(MalformedTapeError):
        Tape(1, [7], [0], [-1], [math.inf])
    with pytest.raises(MalformedTapeError):
        Tape(1, [99], [0], [-1], [0.0])


def test_tape_is_immutable():
    t = build(toy_program(), n=3)
    with pytest.raises(ValueError):
        t.op[0] = 0


def test_text_format():
    t = build(toy_program() + [("scale", 3, 0.5)], n=3)
    text = dump_text(t)
    assert text.splitlines()[0] == "1 mul -2 -1"
    assert text.splitlines()[3] == "4 scale 3 0.5"
    assert parse_text(text) == t


def test_parse_errors():
    with pytest.raises(MalformedTapeError):
        parse_text("2 sin 0\n")
    with pytest.raises(ArityError):
        parse_text("1 mul 0\n")


@given(seeds)
def test_text_round_trip(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    t = random_tape(rng, n, int(rng.integers(1, 20)))
    assert parse_text(dump_text(t), n=n) == t


@given(seeds)
def test_random_tapes_respect_ordering(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    t = random_tape(rng, n, int(rng.integers(1, 30)))
    own = np.arange(n, t.dim)
    assert np.all(t.arg0 < own)
    binary = t.arg1 != NO_ARG
    assert np.all(t.arg1[binary] < own[binary])
    assert np.all(t.arg0[binary] != t.arg1[binary])
