import numpy as np
import pytest

from sparseconv.dense import conv_schoolbook, cyclic_conv, fold_mod, kronecker_linear, linear_conv, ntt_linear
from sparseconv.errors import GuardError

from conftest import dense_brute


@pytest.mark.parametrize("backend", ["auto", "ntt", "kronecker"])
def test_linear_examples(backend):
    assert linear_conv([1], [4, 5, 6], backend) == [4, 5, 6]
    assert linear_conv([1, 2], [3, 4], backend) == [3, 10, 8]
    assert linear_conv([0, 0], [3, 4], backend) == [0, 0, 0]


def test_cyclic_examples():
    assert cyclic_conv([1, 1], [1, 1], 2) == [2, 2]
    assert cyclic_conv([1, 2, 3], [4, 5], 1) == [6 * 9]


def test_schoolbook_examples():
    assert conv_schoolbook([0], [0]) == [0]
    assert conv_schoolbook([2], [3], 1) == [6]


def test_schoolbook_guard():
    with pytest.raises(GuardError):
        conv_schoolbook([1] * 5000, [1] * 5000)


def test_backends_agree_with_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        la, lb = rng.integers(1, 40, size=2)
        a = rng.integers(0, 50, size=la).tolist()
        b = rng.integers(0, 50, size=lb).tolist()
        expect = dense_brute(a, b)
        assert conv_schoolbook(a, b) == expect
        assert linear_conv(a, b) == expect


def test_large_exact_values():
    rng = np.random.default_rng(8)
    a = [int(x) * 2 ** 70 + 1 for x in rng.integers(0, 1000, size=300)]
    b = [int(x) ** 5 for x in rng.integers(0, 1000, size=250)]
    expect = dense_brute(a, b)
    assert ntt_linear(a, b) == expect
    assert kronecker_linear(a, b) == expect


def test_signed_inputs():
    assert linear_conv([1, -2], [3, 4], "ntt") == [3, -2, -8]
    assert linear_conv([1, -2], [3, 4], "kronecker") == [3, -2, -8]


def test_cyclic_is_fold_of_linear():
    rng = np.random.default_rng(9)
    for _ in range(200):
        a = rng.integers(0, 9, size=rng.integers(1, 30)).tolist()
        b = rng.integers(0, 9, size=rng.integers(1, 30)).tolist()
        m = int(rng.integers(1, 20))
        assert cyclic_conv(a, b, m) == fold_mod(dense_brute(a, b), m)
        assert conv_schoolbook(a, b, m) == fold_mod(dense_brute(a, b), m)


def test_mass_is_multiplicative():
    rng = np.random.default_rng(10)
    a = rng.integers(0, 100, size=500).tolist()
    b = rng.integers(0, 100, size=700).tolist()
    assert sum(linear_conv(a, b)) == sum(a) * sum(b)
