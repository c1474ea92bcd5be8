import numpy as np
import pytest

from sparseconv.core import (SparseVec, conv_length, derivative, fold_half, from_dense, mass,
                             norms, support_indicator, to_dense)
from sparseconv.errors import ContractError, GuardError


def test_derivative_examples():
    v = SparseVec(8, [3], [5])
    assert derivative(v, 0) == v
    assert derivative(v, 1).items() == [(3, 15)]
    assert derivative(v, 2).items() == [(3, 45)]


def test_derivative_drops_index_zero():
    v = SparseVec(4, [0, 2], [7, 1])
    assert derivative(v, 1).items() == [(2, 2)]
    assert derivative(v, 0).nnz == 2


def test_norms():
    assert norms(SparseVec.empty(5)) == (0, 0, 0)
    assert norms(SparseVec(8, [3], [5])) == (1, 5, 5)
    assert norms(SparseVec(5, [1, 4], [2, 3])) == (2, 5, 3)


def test_fold_half_examples():
    assert fold_half(SparseVec(1, [0], [7])) == SparseVec(1, [0], [7])
    assert fold_half(SparseVec(4, [0, 2], [1, 3])) == SparseVec(2, [0], [4])
    assert fold_half(SparseVec(5, [1, 4], [2, 6])) == SparseVec(3, [1], [8])


def test_fold_half_rejects_empty_length():
    with pytest.raises(ContractError):
        fold_half(SparseVec.empty(0))


def test_dense_round_trip():
    assert to_dense(SparseVec(3, [1], [2])) == [0, 2, 0]
    assert from_dense([0, 0, 0]) == SparseVec.empty(3)
    rng = np.random.default_rng(1)
    dense = [int(x) if rng.random() < 0.3 else 0 for x in rng.integers(1, 100, size=50)]
    assert to_dense(from_dense(dense)) == dense


def test_to_dense_guard():
    with pytest.raises(GuardError):
        to_dense(SparseVec.empty(100), guard=10)


def test_canonical_construction():
    v = SparseVec.from_pairs(10, [(5, 1), (2, 3), (5, 2), (7, 0)])
    assert v.items() == [(2, 3), (5, 3)]
    assert v.length == 10
    with pytest.raises(ContractError):
        SparseVec(4, [2, 1], [1, 1])
    with pytest.raises(ContractError):
        SparseVec(4, [1], [0])
    with pytest.raises(ContractError):
        SparseVec(4, [4], [1])
    with pytest.raises(ContractError):
        SparseVec(-1)


def test_arrays_are_read_only():
    v = SparseVec(4, [1], [2])
    with pytest.raises(ValueError):
        v.indices[0] = 3


def test_big_values_stay_exact():
    big = 3 ** 200
    v = SparseVec(10, [9], [big])
    assert derivative(v, 2).get(9) == 81 * big
    assert mass(v) == big


def test_helpers():
    v = SparseVec(6, [1, 4], [5, 9])
    assert support_indicator(v).values.tolist() == [1, 1]
    assert conv_length(v, SparseVec.empty(3)) == 8
    assert conv_length(v, SparseVec.empty(0)) == 0
    assert SparseVec.empty(7).length == 7
