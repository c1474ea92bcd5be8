import numpy as np
import pytest

from sparseconv.errors import ContractError
from sparseconv.field import build_extension
from sparseconv.vandermonde import (field_sparse_conv, middle_batch, mullow, polmul, series_inverse,
                                    sparse_evaluate, sparse_interpolate, tv_mul, tv_mul_reference,
                                    tv_solve, tv_solve_reference)


def _consts(F, xs):
    return F.embed_many(xs)


def _poly_brute(F, a, b):
    out = np.zeros((len(a) + len(b) - 1, F.d), dtype=np.int64)
    for i in range(len(a)):
        for j in range(len(b)):
            out[i + j] = F.add(out[i + j], F.mul(a[i], b[j]))
    return out


def test_small_examples_over_f5():
    F = build_extension(5)
    pts = _consts(F, [1, 2])
    assert tv_mul(F, pts, _consts(F, [1, 1]))[:, 0].tolist() == [2, 3]
    assert tv_solve(F, pts, _consts(F, [2, 3]))[:, 0].tolist() == [1, 1]
    assert tv_solve_reference(F, pts, _consts(F, [2, 3]))[:, 0].tolist() == [1, 1]
    assert not tv_mul(F, pts, _consts(F, [0, 0])).any()
    one = _consts(F, [3])
    assert np.array_equal(tv_mul(F, _consts(F, [4]), one), one)
    assert np.array_equal(tv_solve(F, _consts(F, [4]), one), one)


def test_solve_rejects_repeated_points():
    F = build_extension(5)
    with pytest.raises(ContractError):
        tv_solve(F, _consts(F, [2, 2]), _consts(F, [1, 1]))


def test_sparse_evaluate_examples():
    F = build_extension(3)
    vals = sparse_evaluate(F, [0, 1], _consts(F, [1, 1]), F.omega, 2)
    assert np.array_equal(vals, np.stack([F.embed(2), F.element([2, 1])]))
    const = sparse_evaluate(F, [0], _consts(F, [2]), F.omega, 4)
    assert np.array_equal(const, np.tile(F.embed(2), (4, 1)))
    geo = sparse_evaluate(F, [5], _consts(F, [1]), F.omega, 3)
    assert np.array_equal(geo, F.pow_many(F.omega, [0, 5, 10]))


def test_sparse_interpolate_examples():
    F = build_extension(7)
    v = _consts(F, [4])
    exps, coeffs = sparse_interpolate(F, v, [9], F.omega)
    assert exps.tolist() == [9] and np.array_equal(coeffs, v)
    values = sparse_evaluate(F, [2], _consts(F, [1]), F.omega, 2)
    exps, coeffs = sparse_interpolate(F, values, [1, 2], F.omega)
    assert exps.tolist() == [2] and np.array_equal(coeffs, _consts(F, [1]))
    with pytest.raises(ContractError):
        sparse_interpolate(F, values, [2, 1], F.omega)


def test_field_sparse_conv_examples():
    F = build_extension(3)
    a = ([0, 1], _consts(F, [1, 1]))
    exps, coeffs = field_sparse_conv(F, a, a, [0, 1, 2], F.omega)
    assert exps.tolist() == [0, 1, 2] and coeffs[:, 0].tolist() == [1, 2, 1]
    F7 = build_extension(7)
    a = ([0, 1], _consts(F7, [1, 1]))
    exps, coeffs = field_sparse_conv(F7, a, a, [0, 1, 2, 3], F7.omega)
    assert exps.tolist() == [0, 1, 2]


def test_field_sparse_conv_matches_schoolbook():
    rng = np.random.default_rng(2)
    F = build_extension(7)
    for _ in range(30):
        n = int(rng.integers(1, 65))
        ka, kb = rng.integers(1, n + 1, size=2)
        ea = np.sort(rng.choice(n, size=ka, replace=False))
        eb = np.sort(rng.choice(n, size=kb, replace=False))
        ca, cb = F.random(rng, ka), F.random(rng, kb)
        da, db = np.zeros((n, F.d), np.int64), np.zeros((n, F.d), np.int64)
        da[ea], db[eb] = ca, cb
        full = _poly_brute(F, da, db)
        T = np.arange(2 * n - 1)
        exps, coeffs = field_sparse_conv(F, (ea, ca), (eb, cb), T, F.omega)
        support = np.flatnonzero(full.any(axis=1))
        assert exps.tolist() == support.tolist()
        assert np.array_equal(coeffs, full[support])


@pytest.mark.parametrize("t", [1, 2, 3, 17, 64, 65, 100])
def test_fast_paths_equal_references(t):
    rng = np.random.default_rng(t)
    F = build_extension(7)
    for _ in range(3):
        pts = F.pow_many(F.omega, rng.choice(7 ** 6 - 1, size=t, replace=False))
        x = F.random(rng, t)
        ref = tv_mul_reference(F, pts, x)
        assert np.array_equal(tv_mul(F, pts, x, cutover=0), ref)
        assert np.array_equal(tv_mul(F, pts, x, cutover=10 ** 9), ref)
        rows = t + 3
        assert np.array_equal(tv_mul(F, pts, x, rows, cutover=0), tv_mul_reference(F, pts, x, rows))
        assert np.array_equal(tv_solve(F, pts, ref, cutover=0), x)
        assert np.array_equal(tv_solve(F, pts, ref, cutover=10 ** 9), x)
        if t <= 17:
            assert np.array_equal(tv_solve_reference(F, pts, ref), x)


def test_polynomial_helpers():
    rng = np.random.default_rng(4)
    F = build_extension(13)
    a, b = F.random(rng, 40), F.random(rng, 23)
    full = _poly_brute(F, a, b)
    assert np.array_equal(polmul(F, a, b), full)
    assert np.array_equal(mullow(F, a, b, 10), full[:10])
    D = F.random(rng, 30)
    D[0] = F.one
    inv = series_inverse(F, D, 30)
    prod = mullow(F, D, inv, 30)
    assert np.array_equal(prod[0], F.one) and not prod[1:].any()
    c = F.random(rng, 50)
    mid = middle_batch(F, a[None], c[None], 11)[0]
    expect = np.zeros((11, F.d), dtype=np.int64)
    for j in range(11):
        for i in range(len(a)):
            expect[j] = F.add(expect[j], F.mul(a[i], c[i + j]))
    assert np.array_equal(mid, expect)
