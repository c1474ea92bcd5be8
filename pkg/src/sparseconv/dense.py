"""Exact linear and cyclic convolution of dense integer vectors.

Three interchangeable backends, all exact:

* ``schoolbook`` -- the double loop; the test oracle.
* ``ntt`` -- per-prime number-theoretic transforms over word-sized primes,
  recombined by CRT (:class:`NttPlan`).
* ``kronecker`` -- pack each vector into one big integer with fixed-width
  slots and multiply with GMP.  Fastest in CPython, hence the default.

Floating point never appears on any of these paths.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import gmpy2
import numpy as np

from .errors import GuardError

SCHOOLBOOK_GUARD = 1 << 24
SCHOOLBOOK_CUTOVER = 16

_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------- schoolbook


def conv_schoolbook(a: Sequence[int], b: Sequence[int], m: int | None = None,
                    guard: int = SCHOOLBOOK_GUARD) -> list[int]:
    """Linear (``m is None``) or cyclic convolution by the direct double loop."""
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    if len(a) * len(b) > guard:
        raise GuardError(f"schoolbook size {len(a)}x{len(b)} exceeds guard {guard}")
    if m is None:
        if not a or not b:
            return []
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return out
    if m < 1:
        raise ValueError("cyclic length must be >= 1")
    out = [0] * m
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[(i + j) % m] += x * y
    return out


def fold_mod(values: Sequence[int], m: int) -> list[int]:
    """Aggregate entry ``k`` into bucket ``k mod m``."""
    out = [0] * m
    for k, x in enumerate(values):
        out[k % m] += int(x)
    return out


# ---------------------------------------------------------- slot packing


def slot_bytes(bound: int) -> int:
    """Bytes per slot (a multiple of 8) able to hold every value in ``[0, bound]``."""
    return 8 * max(1, (int(bound).bit_length() + 63) // 64)


def pack_dense(values: Sequence[int], wbytes: int) -> gmpy2.mpz:
    """Big integer with ``values[k]`` in slot ``k``; values must be nonnegative."""
    n = len(values)
    if n == 0:
        return gmpy2.mpz(0)
    if isinstance(values, np.ndarray) and values.dtype != object and wbytes == 8:
        return gmpy2.mpz.from_bytes(values.astype(np.uint64).tobytes(), "little")
    vals = np.asarray(values, dtype=object)
    nlimbs = wbytes // 8
    limbs = np.empty((n, nlimbs), dtype=np.uint64)
    for k in range(nlimbs):
        limbs[:, k] = ((vals >> (64 * k)) & _MASK64).astype(np.uint64)
    return gmpy2.mpz.from_bytes(limbs.tobytes(), "little")


def pack_sparse(positions: Sequence[int], values: Sequence[int], wbytes: int) -> gmpy2.mpz:
    """Big integer with ``values[j]`` in slot ``positions[j]`` (positions distinct)."""
    if len(positions) == 0:
        return gmpy2.mpz(0)
    top = int(max(positions)) + 1
    buf = bytearray(top * wbytes)
    for pos, v in zip(np.asarray(positions).tolist(), list(values)):
        off = pos * wbytes
        buf[off:off + wbytes] = int(v).to_bytes(wbytes, "little")
    return gmpy2.mpz.from_bytes(bytes(buf), "little")


def slot_width(bound: int) -> int:
    """Smallest whole number of bytes holding every value in ``[0, bound]``."""
    return max(1, (int(bound).bit_length() + 7) // 8)


def pack_at(positions: np.ndarray, values: np.ndarray, count: int, wbytes: int) -> gmpy2.mpz:
    """Big integer with ``values[j]`` in slot ``positions[j]`` of ``count`` slots.

    Slots are ``wbytes`` bytes wide (any width); values must be nonnegative and
    fit their slot, positions distinct.
    """
    if len(positions) == 0:
        return gmpy2.mpz(0)
    nlimbs = (wbytes + 7) // 8
    limbs = np.zeros((count, nlimbs), dtype=np.uint64)
    vals = np.asarray(values, dtype=object)
    pos = np.asarray(positions, dtype=np.int64)
    for k in range(nlimbs):
        limbs[pos, k] = ((vals >> (64 * k)) & _MASK64).astype(np.uint64)
    raw = limbs.view(np.uint8)
    if wbytes != 8 * nlimbs:
        raw = np.ascontiguousarray(raw[:, :wbytes])
    return gmpy2.mpz.from_bytes(raw.tobytes(), "little")


def unpack_limbs(big: gmpy2.mpz, count: int, wbytes: int) -> np.ndarray:
    """Slots of ``big`` as a ``(count, ceil(wbytes / 8))`` uint64 array of little-endian limbs."""
    raw = gmpy2.mpz(big).to_bytes(count * wbytes, "little") if big else bytes(count * wbytes)
    nlimbs = (wbytes + 7) // 8
    if wbytes == 8 * nlimbs:
        return np.frombuffer(raw, dtype=np.uint64).reshape(count, nlimbs)
    padded = np.zeros((count, 8 * nlimbs), dtype=np.uint8)
    padded[:, :wbytes] = np.frombuffer(raw, dtype=np.uint8).reshape(count, wbytes)
    return padded.view(np.uint64)


def limbs_to_ints(limbs: np.ndarray) -> np.ndarray:
    """Combine rows of 64-bit limbs into an object array of Python ints."""
    out = limbs[:, -1].astype(object)
    for k in range(limbs.shape[1] - 2, -1, -1):
        out = (out << 64) | limbs[:, k].astype(object)
    return out


def fold_slots(big: gmpy2.mpz, m: int, wbytes: int) -> gmpy2.mpz:
    """Cyclic wrap of a packed linear product: slot ``k`` absorbs slots ``k + j*m``.

    The caller's slot width must hold the folded sums.
    """
    shift = 8 * wbytes * m
    mask = (gmpy2.mpz(1) << shift) - 1
    out = gmpy2.mpz(0)
    while big:
        out += big & mask
        big >>= shift
    return out


def _split_signs(values: Sequence[int]) -> tuple[list[int], list[int]]:
    pos = [x if x > 0 else 0 for x in values]
    neg = [-x if x < 0 else 0 for x in values]
    return pos, neg


def _kron_nonneg(a: list[int], b: list[int]) -> list[int]:
    bound = min(len(a), len(b)) * max(a) * max(b)
    w = slot_bytes(bound)
    prod = pack_dense(a, w) * pack_dense(b, w)
    count = len(a) + len(b) - 1
    return limbs_to_ints(unpack_limbs(prod, count, w)).tolist()


def kronecker_linear(a: Sequence[int], b: Sequence[int]) -> list[int]:
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    if not a or not b:
        return []
    count = len(a) + len(b) - 1
    if not any(a) or not any(b):
        return [0] * count
    if min(a) >= 0 and min(b) >= 0:
        return _kron_nonneg(a, b)
    out = [0] * count
    ap, an = _split_signs(a)
    bp, bn = _split_signs(b)
    for x, y, sign in ((ap, bp, 1), (an, bn, 1), (ap, bn, -1), (an, bp, -1)):
        if any(x) and any(y):
            for k, v in enumerate(_kron_nonneg(x, y)):
                out[k] += sign * v
    return out


# ----------------------------------------------------------------------- NTT

_NTT_MAX_LOG = 24


@lru_cache(maxsize=None)
def _ntt_primes(count: int) -> tuple[tuple[int, int], ...]:
    """The ``count`` largest primes ``c * 2**24 + 1 < 2**31`` with a primitive root each."""
    out = []
    c = ((1 << 31) - 2) >> _NTT_MAX_LOG
    while len(out) < count:
        if c < 1:
            raise GuardError("ran out of NTT primes")
        p = c * (1 << _NTT_MAX_LOG) + 1
        if gmpy2.is_prime(p):
            out.append((p, _primitive_root(p)))
        c -= 1
    return tuple(out)


def _primitive_root(p: int) -> int:
    n = p - 1
    factors = []
    x, f = n, 2
    while f * f <= x:
        if x % f == 0:
            factors.append(f)
            while x % f == 0:
                x //= f
        f += 1
    if x > 1:
        factors.append(x)
    g = 2
    while any(pow(g, n // q, p) == 1 for q in factors):
        g += 1
    return g


class NttPlan:
    """Word-sized NTT primes and root tables for one power-of-two transform length.

    The product of the primes exceeds twice ``bound`` so signed results in
    ``[-bound, bound]`` are recovered exactly by a symmetric CRT lift.
    """

    def __init__(self, length: int, bound: int):
        if length & (length - 1) or length < 1:
            raise ValueError("transform length must be a power of two")
        if length > 1 << _NTT_MAX_LOG:
            raise GuardError(f"NTT length {length} exceeds 2**{_NTT_MAX_LOG}")
        self.length = length
        self.bound = int(bound)
        count, prod = 0, 1
        while prod <= 2 * self.bound:
            count += 1
            prod = 1
            for p, _ in _ntt_primes(count):
                prod *= p
        pairs = _ntt_primes(max(count, 1))
        self.primes = [p for p, _ in pairs]
        self.modulus = prod if count else pairs[0][0]
        self._p = np.array(self.primes, dtype=np.uint64).reshape(-1, 1)
        self._fwd = self._root_table([pow(g, (p - 1) // length, p) for p, g in pairs])
        self._inv = self._root_table([pow(pow(g, (p - 1) // length, p), p - 2, p) for p, g in pairs])
        self._ninv = np.array([pow(length, p - 2, p) for p in self.primes], dtype=np.uint64).reshape(-1, 1)
        lg = length.bit_length() - 1
        ar = np.arange(length)
        rev = np.zeros(length, dtype=np.int64)
        for i in range(lg):
            rev |= ((ar >> i) & 1) << (lg - 1 - i)
        self._rev = rev

    def _root_table(self, roots: list[int]) -> np.ndarray:
        half = max(self.length // 2, 1)
        tab = np.ones((len(roots), half), dtype=np.uint64)
        size = 1
        while size < half:
            step = np.array([pow(int(r), size, p) for r, p in zip(roots, self.primes)],
                            dtype=np.uint64).reshape(-1, 1)
            tab[:, size:2 * size] = tab[:, :size] * step % self._p
            size *= 2
        return tab

    def _transform(self, a: np.ndarray, table: np.ndarray) -> np.ndarray:
        n = self.length
        p = self._p
        a = a[:, self._rev]
        h = 1
        while h < n:
            tw = table[:, :: n // (2 * h)][:, :h].reshape(-1, 1, h)
            blk = a.reshape(a.shape[0], n // (2 * h), 2, h)
            u = blk[:, :, 0, :]
            v = blk[:, :, 1, :] * tw % p.reshape(-1, 1, 1)
            pp = p.reshape(-1, 1, 1)
            a = np.stack(((u + v) % pp, (u + pp - v) % pp), axis=2).reshape(a.shape[0], n)
            h *= 2
        return a

    def residues(self, values: Sequence[int]) -> np.ndarray:
        """Values reduced modulo each plan prime, zero-padded to the transform length."""
        vals = np.asarray(values, dtype=object)
        out = np.zeros((len(self.primes), self.length), dtype=np.uint64)
        for r, p in enumerate(self.primes):
            out[r, : len(vals)] = (vals % p).astype(np.uint64)
        return out

    def forward(self, res: np.ndarray) -> np.ndarray:
        return self._transform(res, self._fwd)

    def inverse(self, spec: np.ndarray) -> np.ndarray:
        return self._transform(spec, self._inv) * self._ninv % self._p

    def pointwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x * y % self._p

    def reconstruct(self, res: np.ndarray, count: int) -> list[int]:
        """Garner CRT per column, lifted to the symmetric range."""
        res = res[:, :count]
        primes = self.primes
        digits = [res[0].copy()]
        for i in range(1, len(primes)):
            pi = np.uint64(primes[i])
            acc = res[i].copy()
            for j, dj in enumerate(digits):
                inv = np.uint64(pow(primes[j], primes[i] - 2, primes[i]))
                acc = (acc + pi - dj % pi) % pi * inv % pi
            digits.append(acc)
        out = digits[-1].astype(object)
        for i in range(len(primes) - 2, -1, -1):
            out = out * primes[i] + digits[i].astype(object)
        half = self.modulus // 2
        return [int(x) - self.modulus if x > half else int(x) for x in out]


def ntt_linear(a: Sequence[int], b: Sequence[int]) -> list[int]:
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    if not a or not b:
        return []
    count = len(a) + len(b) - 1
    bound = min(len(a), len(b)) * max(map(abs, a)) * max(map(abs, b))
    length = 1 << max(0, (count - 1).bit_length())
    plan = NttPlan(length, bound)
    fa = plan.forward(plan.residues(a))
    fb = plan.forward(plan.residues(b))
    return plan.reconstruct(plan.inverse(plan.pointwise(fa, fb)), count)


# -------------------------------------------------------------- public API

_BACKENDS = {"kronecker": kronecker_linear, "ntt": ntt_linear}


def linear_conv(a: Sequence[int], b: Sequence[int], backend: str = "auto") -> list[int]:
    """Exact ``a * b``; length ``len(a) + len(b) - 1`` (empty if either is empty)."""
    if backend == "schoolbook" or (
        backend == "auto" and min(len(a), len(b)) < SCHOOLBOOK_CUTOVER
    ):
        return conv_schoolbook(a, b, guard=max(SCHOOLBOOK_GUARD, len(a) * len(b)))
    if backend == "auto":
        backend = "kronecker"
    return _BACKENDS[backend](a, b)


def cyclic_conv(a: Sequence[int], b: Sequence[int], m: int, backend: str = "auto") -> list[int]:
    """Exact wrap-around convolution of length ``m``."""
    if m < 1:
        raise ValueError("cyclic length must be >= 1")
    if not len(a) or not len(b):
        return [0] * m
    return fold_mod(linear_conv(a, b, backend), m)
