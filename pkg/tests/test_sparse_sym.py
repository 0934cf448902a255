import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hotad.errors import BoundsError
from hotad.sparse_sym import SymSparseMat

updates = st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11),
                             st.sampled_from([-2.0, -0.5, 0.0, 0.25, 1.0, 3.0])),
                   max_size=200)


@given(updates)
def test_matches_dense_mirror(ups):
    m = SymSparseMat(12)
    mirror = np.zeros((12, 12))
    for j, k, w in ups:
        m.increment(j, k, w)
        mirror[j, k] += w
        if j != k:
            mirror[k, j] += w
    assert np.array_equal(m.to_dense(), mirror)
    assert m.rows_valid()
    assert m.nnz() == np.count_nonzero(mirror)
    assert m.stored() == len({(max(j, k), min(j, k)) for j, k, _ in ups})
    for j, k, w in m.entries():
        assert j >= k and m.get(k, j) == w


@given(st.lists(st.integers(0, 300), min_size=1, max_size=300))
def test_rows_stay_sorted_under_growth(ks):
    m = SymSparseMat(301, capacity=2)
    for k in ks:
        m.increment(300, k, 1.0)
    row = [k for k, _ in m.iterate_row(300)]
    assert row == sorted(set(ks))
    assert m.rows_valid()


def test_logical_base_and_bounds():
    m = SymSparseMat(3, base=-1)
    m.increment(-1, 1, 2.0)
    assert m[1, -1] == 2.0 and m.contains(-1, 1) and not m.contains(0, 0)
    assert list(m.indices) == [-1, 0, 1]
    with pytest.raises(BoundsError):
        m.increment(2, 0, 1.0)
    with pytest.raises(IndexError):
        m.get(-2, 0)


def test_zero_weights_stored_but_not_counted():
    m = SymSparseMat(4, base=1)
    m.increment(1, 2, 1.0)
    m.increment(2, 1, -1.0)
    m.increment(3, 3, 5.0)
    assert m.stored() == 2
    assert m.nnz() == 1
    assert m.pattern() == {(2, 1), (3, 3)}
    assert m.pattern(nonzero=True) == {(3, 3)}


def test_csv_lists_lower_triangle():
    m = SymSparseMat(3, base=1)
    m.increment(1, 3, 0.5)
    m.increment(2, 2, -1.0)
    assert m.to_csv() == "j,k,weight\n2,2,-1.0\n3,1,0.5\n"


def test_restrict_to_independents():
    m = SymSparseMat(5, base=-2)  # logical -2..2, independents -2..0 for n = 3
    m.increment(-2, 0, 1.0)
    m.increment(0, 0, 2.0)
    m.increment(1, -1, 9.0)
    m.increment(2, 2, 9.0)
    r = m.restrict_to_independents(3)
    assert r.base == 1 and r.dim == 3
    assert r.pattern() == {(3, 1), (3, 3)}
    assert r.get(1, 3) == 1.0 and r.get(3, 3) == 2.0
    assert r.rows_valid()


def test_pattern_containment_count():
    a = SymSparseMat(3)
    b = SymSparseMat(3)
    a.increment(0, 1, 1.0)
    a.increment(2, 2, 1.0)
    b.increment(1, 0, 0.0)
    assert a.pattern_missing_from(b) == 1
    assert b.pattern_missing_from(a) == 0
    with pytest.raises(BoundsError):
        a.pattern_missing_from(SymSparseMat(4))
