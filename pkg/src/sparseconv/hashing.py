"""Hash families used to bucket vector indices.

``LinearHash`` is ``h(x) = (a*x mod N) mod m`` with ``N`` a power of two and
``a`` odd: almost additive up to a small offset set ``phi``.  ``PrimeHash`` is
``h(x) = x mod p`` for a random prime ``p`` in ``[m, 2m]``: exactly additive.

Randomness always comes from a caller-supplied ``numpy.random.Generator``;
:func:`make_rng` builds the documented PCG64 stream from a 64-bit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import SparseVec
from .errors import ContractError, GuardError

SIEVE_GUARD = 1 << 30


def make_rng(seed: int | None = 0) -> np.random.Generator:
    """PCG64 generator; any integer in ``[0, 2**64)`` is a valid seed."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class LinearHash:
    n: int
    m: int
    m_eff: int
    N: int
    a: int
    phi: frozenset

    def __call__(self, x: int) -> int:
        return (self.a * x) % self.N % self.m_eff

    def buckets(self, keys: np.ndarray) -> np.ndarray:
        if self.N > 1 << 64:
            prod = np.asarray(keys, dtype=np.int64).astype(object) * self.a % self.N
            return (prod % self.m_eff).astype(np.int64)
        # N divides 2**64, so wrapping uint64 products reduce correctly
        keys = np.asarray(keys, dtype=np.int64).astype(np.uint64)
        prod = keys * np.uint64(self.a) & np.uint64(self.N - 1)
        return (prod % np.uint64(self.m_eff)).astype(np.int64)

    @property
    def size(self) -> int:
        return self.m


def sample_linear(n: int, m: int, rng: np.random.Generator) -> LinearHash:
    """Draw ``h : [n] -> [m]``; even ``m`` reuses the construction for ``m - 1``."""
    if not n >= m >= 1:
        raise ContractError(f"linear hashing needs n >= m >= 1, got n={n}, m={m}")
    m_eff = m if m % 2 else max(1, m - 1)
    N = 1 << (n * m_eff).bit_length()
    if N // 2 <= 1 << 62:
        a = 2 * int(rng.integers(0, N // 2)) + 1
    else:
        # wide universes: draw the bits directly; N // 2 is a power of two
        nbytes = (N.bit_length() + 7) // 8
        a = 2 * (int.from_bytes(rng.bytes(nbytes), "little") % (N // 2)) + 1
    base = {0, N % m_eff}
    if m % 2:
        phi = frozenset(base)
    else:
        phi = frozenset((f + s) % m for f in base for s in (-1, 0, 1))
    return LinearHash(n=n, m=m, m_eff=m_eff, N=N, a=a, phi=phi)


def eval_linear(h: LinearHash, x: int) -> int:
    if not 0 <= x < 2 * h.n:
        raise ContractError(f"key {x} outside evaluation domain [0, {2 * h.n})")
    return h(x)


def phi_offsets(h: LinearHash) -> frozenset:
    return h.phi


@dataclass(frozen=True)
class PrimeHash:
    m: int
    p: int

    def __call__(self, x: int) -> int:
        return x % self.p

    def buckets(self, keys: np.ndarray) -> np.ndarray:
        return np.asarray(keys, dtype=np.int64) % self.p

    @property
    def size(self) -> int:
        return self.p


def _small_primes(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i::i] = False
    return np.flatnonzero(sieve)


@lru_cache(maxsize=256)
def _primes_cached(lo: int, hi: int) -> np.ndarray:
    lo = max(lo, 2)
    if hi < lo:
        out = np.zeros(0, dtype=np.int64)
    else:
        seg = np.ones(hi - lo + 1, dtype=bool)
        for q in _small_primes(math.isqrt(hi)).tolist():
            start = max(q * q, -(-lo // q) * q)
            seg[start - lo::q] = False
        out = np.flatnonzero(seg).astype(np.int64) + lo
    out.flags.writeable = False
    return out


def primes_in_range(lo: int, hi: int, guard: int = SIEVE_GUARD) -> np.ndarray:
    """All primes in ``[lo, hi]``, ascending, by a segmented sieve of Eratosthenes."""
    if hi > guard:
        raise GuardError(f"sieve bound {hi} exceeds guard {guard}")
    return _primes_cached(int(lo), int(hi))


def sample_prime_hash(m: int, rng: np.random.Generator) -> PrimeHash:
    if m < 2:
        raise ContractError("prime hashing needs m >= 2")
    candidates = primes_in_range(m, 2 * m)
    return PrimeHash(m=m, p=int(candidates[rng.integers(0, len(candidates))]))


def hash_sparse(h: LinearHash | PrimeHash, keys: np.ndarray, values: np.ndarray
                ) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate ``values`` by bucket: sorted distinct buckets and exact sums."""
    if len(keys) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=object)
    b = h.buckets(keys)
    uniq, inv = np.unique(b, return_inverse=True)
    if len(uniq) == len(b):
        order = np.argsort(b)
        return b[order], values[order]
    acc = np.zeros(len(uniq), dtype=object)
    np.add.at(acc, inv, values)
    return uniq, acc


def hash_vector(h: LinearHash | PrimeHash, v: SparseVec) -> list[int]:
    """Dense hashed vector ``h(V)_j = sum of V_i over h(i) = j``."""
    out = [0] * h.size
    buckets, sums = hash_sparse(h, v.indices, v.values)
    for j, s in zip(buckets.tolist(), sums.tolist()):
        out[j] = s
    return out
