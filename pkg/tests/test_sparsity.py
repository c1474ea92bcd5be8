import itertools

import numpy as np

from sparseconv.core import SparseVec, from_dense
from sparseconv.sparsity import BucketMoments, Many, One, Zero, classify, classify_buckets, moments


def test_moments_examples():
    assert moments(SparseVec.empty(4)) == (0, 0, 0)
    assert moments(SparseVec(8, [3], [5])) == (5, 15, 45)
    assert moments(SparseVec(2, [0, 1], [1, 1])) == (2, 1, 1)


def test_classify_examples():
    assert classify(BucketMoments(0, 0, 0), 10) == Zero()
    assert classify(BucketMoments(5, 15, 45), 10) == One(3, 5)
    assert classify(BucketMoments(2, 1, 1), 10) == Many()


def test_classify_defensive_cases():
    # passes the square test but the index is not integral
    assert classify(BucketMoments(4, 2, 1), 10) == Many()
    # index beyond the range
    assert classify(BucketMoments(5, 15, 45), 3) == Many()
    assert classify(BucketMoments(-1, 0, 0), 10) == Many()


def test_exhaustive_small_vectors():
    for dense in itertools.product(range(4), repeat=6):
        v = from_dense(list(dense))
        m = moments(v)
        assert m.y * m.y <= m.x * m.z
        verdict = classify(m, 6)
        if v.nnz == 0:
            assert verdict == Zero()
        elif v.nnz == 1:
            assert verdict == One(int(v.indices[0]), v.values[0])
        else:
            assert verdict == Many()


def test_vectorised_classify_matches_scalar():
    rng = np.random.default_rng(3)
    rows = [moments(from_dense(rng.integers(0, 3, size=5).tolist())) for _ in range(500)]
    rows += [BucketMoments(4, 2, 1), BucketMoments(5, 15, 45)]
    x, y, z = (np.array([r[k] for r in rows], dtype=object) for k in range(3))
    mask, idx = classify_buckets(x, y, z, 4)
    for r, ok, i in zip(rows, mask, idx):
        verdict = classify(r, 4)
        assert ok == isinstance(verdict, One)
        if ok:
            assert i == verdict.index
