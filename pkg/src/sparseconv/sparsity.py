"""Recognise buckets that hold a single nonzero entry of a nonnegative vector.

For a nonnegative vector ``V`` the three moments ``x = sum V_i``,
``y = sum i V_i`` and ``z = sum i^2 V_i`` satisfy ``y^2 <= x z`` by
Cauchy-Schwarz, with equality exactly when ``V`` has at most one nonzero
entry.  In that case the entry sits at ``y / x`` and has value ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import SparseVec


class BucketMoments(NamedTuple):
    x: int
    y: int
    z: int


# dataclasses rather than empty tuples, so that Zero() != Many()
@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class One:
    index: int
    value: int


@dataclass(frozen=True)
class Many:
    pass


Verdict = Zero | One | Many


def moments(v: SparseVec) -> BucketMoments:
    idx = v.indices.astype(object)
    vals = v.values
    return BucketMoments(int(vals.sum()), int((idx * vals).sum()), int((idx * idx * vals).sum()))


def classify(m: BucketMoments, max_index: int) -> Verdict:
    """Zero, One(index, value) or Many; sound only for nonnegative vectors."""
    x, y, z = m
    if x == 0:
        return Zero()
    if x < 0 or y < 0 or y * y != x * z or y % x:
        return Many()
    i = y // x
    if i >= max_index:
        return Many()
    return One(i, x)


def classify_buckets(x: np.ndarray, y: np.ndarray, z: np.ndarray, max_index: int
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`classify` over object arrays of moments.

    Returns a boolean mask of buckets classified One and the corresponding
    recovered indices (as an int64 array, only meaningful where the mask holds).
    Buckets with ``x == 0`` are never in the mask.
    """
    if len(x) == 0:
        return np.zeros(0, dtype=bool), np.zeros(0, dtype=np.int64)
    pos = x > 0
    safe_x = np.where(pos, x, 1)
    ok = pos & (y >= 0) & (y * y == x * z) & (y % safe_x == 0)
    ok = ok.astype(bool)
    q = np.where(ok, y // safe_x, 0)
    ok &= q < max_index
    return ok, np.where(ok, q, 0).astype(np.int64)
