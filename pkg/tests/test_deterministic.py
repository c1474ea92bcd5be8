import math

import numpy as np
import pytest

from sparseconv.core import SparseVec
from sparseconv.deterministic import (DetReport, conv_with_support, deterministic_conv, make_plan,
                                      plan_primes, support_superset)
from sparseconv.errors import ContractError

from conftest import brute, instances


def test_conv_with_support_examples():
    a = SparseVec(8, [0, 5], [1, 1])
    b = SparseVec(8, [0, 7], [1, 1])
    expect = [(0, 1), (5, 1), (7, 1), (12, 1)]
    assert conv_with_support(a, b, [0, 5, 7, 12]).items() == expect
    assert conv_with_support(a, b, [0, 3, 5, 7, 12]).items() == expect
    e = SparseVec(8, [0], [1])
    assert conv_with_support(e, b, b.indices) == b.with_length(15)


def test_conv_with_support_signed():
    a = SparseVec(8, [0, 5], [-3, 2])
    b = SparseVec(8, [0, 2], [4, -1])
    T = np.arange(15)
    assert conv_with_support(a, b, T) == brute(a, b)


def test_conv_with_support_rejects_out_of_range():
    a = SparseVec(4, [0], [1])
    with pytest.raises(ContractError):
        conv_with_support(a, a, [7])


def test_support_superset_examples():
    one = SparseVec(1, [0], [1])
    assert 0 in support_superset(one, one).tolist()
    a = SparseVec(4, [0, 2], [1, 1])
    b = SparseVec(4, [0], [1])
    T = set(support_superset(a, b).tolist())
    assert {0, 2} <= T <= {0, 2, 4}


def test_support_superset_invariants():
    for a, b in instances(21, 40, n_max=1 << 16, k_max=64):
        truth = set(brute(a, b).indices.tolist())
        T = support_superset(a, b)
        assert truth <= set(T.tolist())
        assert len(T) <= 3 * len(truth)
        assert np.all(np.diff(T) > 0)


def test_recursion_reaches_folds():
    rng = np.random.default_rng(3)
    n = 1 << 14
    a = SparseVec(n, np.sort(rng.choice(n, 20, replace=False)), [1] * 20)
    b = SparseVec(n, np.sort(rng.choice(n, 15, replace=False)), [2] * 15)
    rep = DetReport()
    out = deterministic_conv(a, b, report=rep)
    assert out == brute(a, b)
    assert rep.levels > 1 and rep.dense_levels == 1
    assert rep.levels <= math.ceil(math.log2(n)) + 1
    assert rep.final_nnz == out.nnz
    assert rep.summary().startswith("algo=det levels=")


def test_plan_primes():
    plan = plan_primes(1 << 20, 10 ** 12)
    assert all(p > 20 for p in plan.primes)
    assert plan.modulus > 10 ** 12
    assert math.prod(plan.primes[:-1]) <= 10 ** 12
    assert plan_primes(4, 0).primes == (7,)
    assert min(plan_primes(2, 100).primes) >= 7


def test_make_plan_uses_value_magnitude():
    a = SparseVec(4, [0], [1 << 40])
    plan = make_plan(a, a)
    assert plan.threshold >= 40
    assert plan.modulus > (1 << 80)


def test_deterministic_matches_brute_force():
    for a, b in instances(22, 30, n_max=1 << 18, k_max=100):
        assert deterministic_conv(a, b) == brute(a, b)


def test_empty_and_contract():
    e = SparseVec.empty(10)
    assert deterministic_conv(e, SparseVec(10, [1], [1])) == SparseVec.empty(19)
    with pytest.raises(ContractError):
        deterministic_conv(SparseVec(4, [1], [-1]), SparseVec(4, [1], [1]))


def test_threads_do_not_change_output(monkeypatch):
    a, b = instances(23, 1, n_max=1 << 16, k_max=128)[0]
    a = SparseVec(a.length, a.indices, [v * 10 ** 30 for v in a.values.tolist()])
    one = deterministic_conv(a, b, threads=1)
    monkeypatch.setenv("SPARSECONV_THREADS", "4")
    four = deterministic_conv(a, b)
    assert one == four == brute(a, b)
    monkeypatch.setenv("SPARSECONV_THREADS", "zero")
    with pytest.raises(ContractError):
        deterministic_conv(a, b)


def test_dense_shortcut_agrees_with_field_path():
    # short outputs with a wide superset take the dense shortcut in deterministic_conv
    for a, b in instances(24, 8, n_max=600, k_max=60):
        T = support_superset(a, b)
        assert deterministic_conv(a, b) == conv_with_support(a, b, T) == brute(a, b)


def test_superset_clipped_to_reachable_range():
    # folding can enlarge the support: B folds to {0, 2500}, so the folded product
    # has 4 indices while A * B has 3
    a, b = SparseVec(5001, [0, 1], [1, 1]), SparseVec(5001, [2500, 2501], [1, 1])
    T = support_superset(a, b).tolist()
    assert T == [2500, 2501, 2502] == brute(a, b).indices.tolist()
