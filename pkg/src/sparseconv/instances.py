"""Random nonnegative test instances shared by the bench command and the test suites."""

from __future__ import annotations

import math

import numpy as np

from .core import SparseVec


def random_sparse(rng: np.random.Generator, n: int, k: int, vmax: int) -> SparseVec:
    """``k`` distinct indices in ``[0, n)`` (capped at ``n``) with values in ``[1, vmax]``."""
    k = min(k, n)
    if k == 0:
        return SparseVec.empty(n)
    if n <= 4 * k:
        idx = np.sort(rng.choice(n, size=k, replace=False))
    else:
        idx = np.unique(rng.integers(0, n, size=k))
        while len(idx) < k:
            idx = np.unique(np.concatenate([idx, rng.integers(0, n, size=k - len(idx))]))
    vals = rng.integers(1, vmax + 1, size=len(idx)).astype(object)
    return SparseVec._trusted(n, idx.astype(np.int64), vals)


def _log_uniform(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(min(hi, max(lo, round(2 ** rng.uniform(math.log2(lo), math.log2(hi))))))


def random_instance(rng: np.random.Generator, n_max: int = 1 << 20, k_max: int = 256,
                    vmax: int = 1 << 16) -> tuple[SparseVec, SparseVec]:
    """A pair of length-``n`` inputs with ``n`` and both sparsities log-uniform."""
    n = _log_uniform(rng, 1, n_max)
    ka = _log_uniform(rng, 1, k_max)
    kb = _log_uniform(rng, 1, k_max)
    return random_sparse(rng, n, ka, vmax), random_sparse(rng, n, kb, vmax)


def schoolbook_sparse(a: SparseVec, b: SparseVec) -> SparseVec:
    """The reference product: every entry pair, summed per output index."""
    n = a.length + b.length - 1 if a.length and b.length else 0
    out: dict = {}
    for i, x in a.items():
        for j, y in b.items():
            out[i + j] = out.get(i + j, 0) + x * y
    return SparseVec.from_dict(n, out)
