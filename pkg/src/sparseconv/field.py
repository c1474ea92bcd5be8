"""Prime fields, the extensions F_p[X]/(X^(p-1) - beta), and Chinese remaindering.

An extension element is an int64 numpy array of its ``d = p - 1``
coefficients (constant term first), each in ``[0, p)``.  Every arithmetic
routine accepts stacked arrays of shape ``(..., d)`` so whole batches of
elements are processed by a handful of numpy operations.

With ``beta`` a primitive root mod ``p`` the modulus is irreducible, and for
``p >= 7`` the element ``omega = X + 1`` has multiplicative order at least
``2**p``; the deterministic engine relies on both facts.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ContractError


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation by trial division (small inputs only)."""
    out: dict[int, int] = {}
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == {n: 1}


def find_primitive(p: int) -> int:
    """Smallest ``beta >= 2`` of multiplicative order exactly ``p - 1`` modulo ``p``."""
    if p < 3 or not is_prime(p):
        raise ContractError(f"find_primitive needs an odd prime, got {p}")
    qs = list(factorize(p - 1))
    beta = 2
    while any(pow(beta, (p - 1) // q, p) == 1 for q in qs):
        beta += 1
    return beta


class ExtField:
    """The field ``F_p[X] / (X^d - beta)`` with ``d = p - 1``; immutable once built."""

    def __init__(self, p: int, beta: int | None = None):
        if p < 3 or not is_prime(p):
            raise ContractError(f"extension needs an odd prime, got {p}")
        self.p = p
        self.d = p - 1
        self.beta = find_primitive(p) if beta is None else beta % p
        self.one = self.embed(1)
        self.zero = np.zeros(self.d, dtype=np.int64)
        self.omega = self.element([1, 1])
        self.omega.flags.writeable = False
        self.one.flags.writeable = False
        self.zero.flags.writeable = False
        self._const_cache: dict = {}

    def __repr__(self) -> str:
        return f"ExtField(p={self.p}, beta={self.beta})"

    @property
    def order(self) -> int:
        """Number of elements ``p**d``."""
        return self.p ** self.d

    # ----------------------------------------------------------- conversion

    def embed(self, c: int) -> np.ndarray:
        out = np.zeros(self.d, dtype=np.int64)
        out[0] = c % self.p
        return out

    def embed_many(self, values) -> np.ndarray:
        vals = np.asarray(values, dtype=object) % self.p
        out = np.zeros((len(vals), self.d), dtype=np.int64)
        out[:, 0] = vals.astype(np.int64)
        return out

    def element(self, coeffs: Sequence[int]) -> np.ndarray:
        coeffs = list(coeffs)
        if len(coeffs) > self.d:
            raise ContractError(f"element has more than {self.d} coefficients")
        out = np.zeros(self.d, dtype=np.int64)
        out[: len(coeffs)] = [c % self.p for c in coeffs]
        return out

    def is_constant(self, a: np.ndarray) -> np.ndarray:
        return ~np.any(a[..., 1:], axis=-1)

    # ----------------------------------------------------------- arithmetic

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def scale(self, a, c: int):
        return a * (c % self.p) % self.p

    def reduce(self, full: np.ndarray) -> np.ndarray:
        """Reduce ``(..., k)`` coefficient arrays with ``k <= 2d - 1`` modulo ``X^d - beta``."""
        d = self.d
        k = full.shape[-1]
        if k <= d:
            out = np.zeros(full.shape[:-1] + (d,), dtype=np.int64)
            out[..., :k] = full % self.p
            return out
        out = full[..., :d] % self.p
        hi = full[..., d:] % self.p
        out[..., : k - d] += self.beta * hi
        return out % self.p

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise products of (broadcast) batches of elements."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        d = self.d
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        acc = np.zeros(shape + (2 * d - 1,), dtype=np.int64)
        for i in range(d):
            acc[..., i:i + d] += a[..., i:i + 1] * b
        return self.reduce(acc)

    def sqr(self, a):
        return self.mul(a, a)

    def outer_mul(self, f: np.ndarray, r: np.ndarray, reduce: bool = True) -> np.ndarray:
        """All products ``f[i] * r[j]`` as a ``(len(f), len(r), d)`` array.

        Multiplication by ``X^k`` is a fixed shift-and-wrap, so the table is a
        single matrix product against the ``d`` shifted copies of ``r``.  Entries
        stay below ``d (p-1)^2``, which float64 represents exactly.  With
        ``reduce=False`` those unreduced float64 sums are returned.
        """
        f = np.asarray(f, dtype=np.int64)
        r = np.asarray(r, dtype=np.int64)
        d, p = self.d, self.p
        shifts = np.empty((d,) + r.shape, dtype=np.int64)
        shifts[0] = r
        for k in range(1, d):
            prev = shifts[k - 1]
            shifts[k, ..., 1:] = prev[..., :-1]
            shifts[k, ..., 0] = prev[..., -1] * self.beta % p
        prod = np.tensordot(f.astype(np.float64), shifts.astype(np.float64), axes=(1, 0))
        if not reduce:
            return prod
        return prod.astype(np.int64) % p

    def const_matrix(self, c: np.ndarray) -> np.ndarray:
        """Matrix ``M`` with ``x @ M = x * c`` (mod p) for row vectors ``x``."""
        key = c.tobytes()
        m = self._const_cache.get(key)
        if m is None:
            basis = np.eye(self.d, dtype=np.int64)
            m = self.mul(basis, c)
            m.flags.writeable = False
            if len(self._const_cache) < 4096:
                self._const_cache[key] = m
        return m

    def mul_const(self, a: np.ndarray, c: np.ndarray) -> np.ndarray:
        return (a @ self.const_matrix(c)) % self.p

    def pow(self, a: np.ndarray, e: int) -> np.ndarray:
        if e < 0:
            return self.pow(self.inv(a), -e)
        result = self.one.copy()
        base = np.array(a, dtype=np.int64)
        while e:
            if e & 1:
                result = self.mul(result, base)
            e >>= 1
            if e:
                base = self.sqr(base)
        return result

    def pow_many(self, base: np.ndarray, exps) -> np.ndarray:
        """``base ** e`` for every ``e`` in ``exps`` (nonnegative), as a ``(len, d)`` array."""
        exps = np.asarray(exps, dtype=np.int64)
        out = np.broadcast_to(self.one, (len(exps), self.d)).copy()
        if len(exps) == 0:
            return out
        sq = np.array(base, dtype=np.int64)
        top = int(exps.max())
        bit = 0
        while (top >> bit) > 0:
            mask = ((exps >> bit) & 1).astype(bool)
            if mask.any():
                out[mask] = self.mul_const(out[mask], sq)
            bit += 1
            if (top >> bit) > 0:
                sq = self.sqr(sq)
        return out

    def inv(self, a: np.ndarray) -> np.ndarray:
        """Inverse of one nonzero element by the extended Euclidean algorithm."""
        p, d = self.p, self.d
        coeffs = [int(c) for c in np.asarray(a).reshape(-1)]
        if not any(coeffs):
            raise ZeroDivisionError("inverse of zero in extension field")
        # polynomials as coefficient lists, constant term first
        r0 = [(-self.beta) % p] + [0] * (d - 1) + [1]
        r1 = _trim(coeffs)
        s0, s1 = [0], [1]
        while r1 != [0]:
            q, r = _pdivmod(r0, r1, p)
            r0, r1 = r1, r
            s0, s1 = s1, _psub(s0, _pmul(q, s1, p), p)
        # r0 is a nonzero constant (the modulus is irreducible)
        c = pow(r0[0], p - 2, p)
        out = np.zeros(d, dtype=np.int64)
        vals = [(x * c) % p for x in s0]
        out[: len(vals)] = vals
        return out

    def inv_many(self, a: np.ndarray) -> np.ndarray:
        """Inverses of a batch of nonzero elements with one field inversion (product tree)."""
        a = np.asarray(a, dtype=np.int64)
        n = len(a)
        if n == 0:
            return a.copy()
        if not np.all(np.any(a, axis=-1)):
            raise ZeroDivisionError("inverse of zero in extension field")
        size = 1
        while size < n:
            size *= 2
        level = np.broadcast_to(self.one, (size, self.d)).copy()
        level[:n] = a
        levels = [level]
        while len(level) > 1:
            level = self.mul(level[0::2], level[1::2])
            levels.append(level)
        inv = self.inv(level[0])[None, :]
        for lower in reversed(levels[:-1]):
            nxt = np.empty_like(lower)
            nxt[0::2] = self.mul(inv, lower[1::2])
            nxt[1::2] = self.mul(inv, lower[0::2])
            inv = nxt
        return inv[:n]

    def equal(self, a, b) -> bool:
        return bool(np.array_equal(np.asarray(a) % self.p, np.asarray(b) % self.p))

    def random(self, rng: np.random.Generator, size: int | None = None, nonzero=False):
        shape = (self.d,) if size is None else (size, self.d)
        out = rng.integers(0, self.p, size=shape, dtype=np.int64)
        if nonzero:
            flat = out.reshape(-1, self.d)
            bad = ~np.any(flat, axis=-1)
            flat[bad, 0] = 1
        return out


def _trim(c: list[int]) -> list[int]:
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c or [0]


def _pmul(a: list[int], b: list[int], p: int) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _psub(a: list[int], b: list[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return _trim([(x - y) % p for x, y in zip(a, b)])


def _pdivmod(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    db = len(b) - 1
    if len(a) <= db:
        return [0], _trim(list(a))
    a = list(a)
    inv_lead = pow(b[-1], p - 2, p)
    q = [0] * (len(a) - db)
    for k in range(len(a) - 1, db - 1, -1):
        c = a[k] * inv_lead % p
        q[k - db] = c
        if c:
            for i, y in enumerate(b):
                a[k - db + i] = (a[k - db + i] - c * y) % p
    return _trim(q), _trim(a[:db] or [0])


@lru_cache(maxsize=None)
def build_extension(p: int) -> ExtField:
    """Shared immutable context for ``F_p[X]/(X^(p-1) - beta)``, beta the least primitive root."""
    return ExtField(p)


def ext_add(ctx: ExtField, a, b):
    return ctx.add(a, b)


def ext_mul(ctx: ExtField, a, b):
    return ctx.mul(a, b)


def ext_inv(ctx: ExtField, a):
    return ctx.inv(a)


def ext_pow(ctx: ExtField, a, e: int):
    return ctx.pow(a, e)


def multiplicative_order(ctx: ExtField, x: np.ndarray, cap: int | None = None) -> int:
    """Exact order of a nonzero element, by dividing prime factors out of ``q - 1``.

    With ``cap`` given and ``q - 1`` too large to factor quickly, returns a
    lower bound ``cap`` once powering shows no smaller order (still exact when
    the order is found below ``cap``).
    """
    if not np.any(x):
        raise ContractError("order of zero is undefined")
    group = ctx.order - 1
    if cap is not None and group.bit_length() > 64:
        cur = np.array(x, dtype=np.int64)
        for k in range(1, cap):
            if ctx.equal(cur, ctx.one):
                return k
            cur = ctx.mul(cur, x)
        return cap
    order = group
    for q, e in factorize(group).items():
        for _ in range(e):
            if ctx.equal(ctx.pow(x, order // q), ctx.one):
                order //= q
            else:
                break
    return order


def crt_reconstruct(residues: Sequence[tuple[int, int]]) -> int:
    """The value in ``[0, prod p)`` with the given residues, by Garner's method."""
    value, modulus = 0, 1
    for r, p in residues:
        r %= p
        t = (r - value) * pow(modulus, -1, p) % p
        value += modulus * t
        modulus *= p
    return value


def crt_many(residues: np.ndarray, primes: Sequence[int]) -> np.ndarray:
    """Vectorised :func:`crt_reconstruct`: column ``j`` of ``residues`` holds one value's residues."""
    residues = np.asarray(residues, dtype=np.int64)
    value = np.zeros(residues.shape[1], dtype=object)
    modulus = 1
    for row, p in zip(residues, primes):
        inv = pow(modulus % p, -1, p)
        vm = (value % p).astype(np.int64)
        t = (row - vm) % p * inv % p
        value = value + t.astype(object) * modulus
        modulus *= p
    return value
