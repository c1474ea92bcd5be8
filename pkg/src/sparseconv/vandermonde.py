"""Transposed Vandermonde products and solves over an extension field, and the
sparse evaluation / interpolation / convolution built on them.

For points ``a_0..a_{L-1}`` the transposed Vandermonde product is
``y_j = sum_i x_i * a_i**j``; these are the first coefficients of the power
series ``sum_i x_i / (1 - a_i Y) = N(Y) / D(Y)``.  The fast path builds ``N``
and ``D`` with a product tree and divides by Newton iteration; the solve goes
through ``x_i = N~(a_i) / P'(a_i)`` with multipoint evaluation done by the
transpose of the same product tree.  Quadratic versions of everything are
kept for small sizes and as test references.

Polynomials over the field are ``(L, d)`` int64 arrays, constant term first.
Their products are 2D float FFT convolutions, used only when an a-priori error
bound guarantees exact rounding (and the rounding residual confirms it);
otherwise a Kronecker-substituted GMP multiplication is used.
"""

from __future__ import annotations

import gmpy2
import numpy as np

from .errors import ContractError
from .field import ExtField

#: below this many points the quadratic algorithms are used
FAST_CUTOVER = 16
#: polynomial products with a factor this short use batched schoolbook
SMALL_POLY = 0
#: float elements per FFT batch chunk
FFT_BATCH_ELEMS = 1 << 22


# ------------------------------------------------------- polynomial products
#
# Products of polynomials over F_q are two-dimensional integer convolutions
# (along the polynomial variable and along X) followed by reduction mod
# X^d - beta.  The float path does the 2D convolution with a real FFT whose
# row length is cyclic wherever the caller only needs part of the output;
# along X it is always cyclic (see _Spectra).


def _raw_rowmul(F: ExtField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unreduced coefficient products (length ``2d - 1``) of broadcast element batches."""
    d = F.d
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    acc = np.zeros(shape + (2 * d - 1,), dtype=np.int64)
    for i in range(d):
        acc[..., i:i + d] += a[..., i:i + 1] * b
    return acc


def _pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _fft_ok(F: ExtField, la: int, lb: int, R: int, terms: int = 1) -> bool:
    """Whether a float FFT product is guaranteed to round to the exact integers.

    The error of an FFT product is below ``c * log2(size) * eps * |a|_2 * |b|_2``;
    with ``c = 8`` we demand it stay under 1/16.  The weights ``theta**j`` used by
    :class:`_Spectra` are at most ``beta``, which enters once per factor.
    """
    d, p = F.d, F.p
    norm = terms * ((la * d) * (lb * d)) ** 0.5 * ((p - 1) * F.beta) ** 2
    size = R * d
    return 8 * size.bit_length() * 2.3e-16 * norm < 1 / 16


class _Spectra:
    """2D real FFTs of ``(..., L, d)`` polynomial batches at ``R`` rows.

    Along ``X`` the product mod ``X^d - beta`` is a weighted cyclic convolution:
    scaling coefficient ``j`` by ``theta**j`` with ``theta**d = beta`` turns it
    into a plain cyclic one of length ``d``, so no zero padding or separate
    reduction is needed in that direction.
    """

    def __init__(self, F: ExtField, R: int):
        self.F, self.R = F, R
        theta = float(F.beta) ** (1.0 / F.d)
        self.w = theta ** np.arange(F.d)
        self.winv = 1.0 / self.w

    def fwd(self, x: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(x * self.w, s=(self.R, self.F.d), axes=(-2, -1))

    def inv(self, z: np.ndarray, lo: int, hi: int) -> np.ndarray | None:
        """Rows ``lo:hi`` of the product, reduced into the field (None if rounding is unsafe)."""
        raw = np.fft.irfft2(z, s=(self.R, self.F.d), axes=(-2, -1))[..., lo:hi, :] * self.winv
        r = np.rint(raw)
        if raw.size and np.abs(raw - r).max() > 0.25:
            return None
        return r.astype(np.int64) % self.F.p


def _chunks(k: int, elems_per_item: int):
    step = max(1, FFT_BATCH_ELEMS // max(1, elems_per_item))
    for lo in range(0, k, step):
        yield slice(lo, min(k, lo + step))


def _schoolbook_batch(F: ExtField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    k, la, d = a.shape
    lb = b.shape[1]
    acc = np.zeros((k, la + lb - 1, 2 * d - 1), dtype=np.int64)
    for i in range(la):
        acc[:, i:i + lb] += _raw_rowmul(F, a[:, i:i + 1], b)
    return F.reduce(acc)


def _polmul_gmp(F: ExtField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact product through one big-integer multiplication (any size)."""
    la, lb = len(a), len(b)
    d, p = F.d, F.p
    S = 2 * d - 1
    bound = min(la, lb) * d * (p - 1) ** 2
    dt = np.uint32 if bound < 1 << 32 else np.uint64
    w = np.dtype(dt).itemsize

    def pack(poly):
        buf = np.zeros((len(poly), S), dtype=dt)
        buf[:, :d] = poly
        return gmpy2.mpz.from_bytes(buf.tobytes(), "little")

    prod = pack(a) * pack(b)
    rows = la + lb - 1
    raw = gmpy2.mpz(prod).to_bytes(rows * S * w, "little") if prod else bytes(rows * S * w)
    full = np.frombuffer(raw, dtype=dt).reshape(rows, S).astype(np.int64)
    return F.reduce(full)


def _exact_batch(F: ExtField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if min(a.shape[1], b.shape[1]) <= SMALL_POLY:
        return _schoolbook_batch(F, a, b)
    return np.stack([_polmul_gmp(F, a[j], b[j]) for j in range(len(a))])


def _fft_rows(F: ExtField, a: np.ndarray, b: np.ndarray, R: int, lo: int, hi: int
              ) -> np.ndarray | None:
    """Rows ``lo:hi`` of the products, computed cyclically with ``R`` rows (None if inexact)."""
    k = len(a)
    out = np.empty((k, hi - lo, F.d), dtype=np.int64)
    sp = _Spectra(F, R)
    for s in _chunks(k, R * F.d):
        part = sp.inv(sp.fwd(a[s]) * sp.fwd(b[s]), lo, hi)
        if part is None:
            return None
        out[s] = part
    return out


def polmul_batch(F: ExtField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Products of polynomial batches ``(k, la, d) x (k, lb, d) -> (k, la + lb - 1, d)``."""
    k, la, d = a.shape
    lb = b.shape[1]
    if la == 0 or lb == 0:
        return np.zeros((k, 0, d), dtype=np.int64)
    rows = la + lb - 1
    if min(la, lb) > SMALL_POLY and _fft_ok(F, la, lb, _pow2(rows)):
        out = _fft_rows(F, a, b, _pow2(rows), 0, rows)
        if out is not None:
            return out
    return _exact_batch(F, a, b)


def polmul(F: ExtField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two polynomials over the field."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros((0, F.d), dtype=np.int64)
    return polmul_batch(F, a[None], b[None])[0]


def mullow(F: ExtField, a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """``a * b mod Y^n``, zero-padded to exactly ``n`` coefficients."""
    out = np.zeros((n, F.d), dtype=np.int64)
    if n == 0 or len(a) == 0 or len(b) == 0:
        return out
    prod = polmul(F, a[:n], b[:n])[:n]
    out[: len(prod)] = prod
    return out


def middle_batch(F: ExtField, a: np.ndarray, c: np.ndarray, n: int) -> np.ndarray:
    """``r[j] = sum_i a_i c_{i+j}`` for ``j < n`` over batches (transposed multiplication).

    Computed as rows ``la-1 .. la-2+n`` of ``rev(a) * c``; a cyclic length of
    ``max(lc, la - 1 + n)`` rows leaves those rows free of wrap-around.
    """
    k, la, d = a.shape
    lc = c.shape[1]
    out = np.zeros((k, n, d), dtype=np.int64)
    if la == 0 or lc == 0 or n == 0:
        return out
    ra = a[:, ::-1]
    R = _pow2(max(lc, la - 1 + n))
    hi = min(la - 1 + n, la + lc - 1)
    if min(la, lc) > SMALL_POLY and _fft_ok(F, la, lc, R):
        rows = _fft_rows(F, ra, c, R, la - 1, hi)
        if rows is not None:
            out[:, : hi - la + 1] = rows
            return out
    out[:, : hi - la + 1] = _exact_batch(F, ra, c)[:, la - 1: hi]
    return out


def mul_transposed(F: ExtField, a: np.ndarray, c: np.ndarray, n: int) -> np.ndarray:
    """Single-polynomial :func:`middle_batch`."""
    return middle_batch(F, a[None], c[None], n)[0]


def series_inverse(F: ExtField, D: np.ndarray, n: int) -> np.ndarray:
    """First ``n`` coefficients of ``1 / D`` for ``D(0) = 1``, by Newton iteration."""
    if not F.equal(D[0], F.one):
        raise ContractError("series inverse expects constant term 1")
    g = np.zeros((1, F.d), dtype=np.int64)
    g[0] = F.one
    k = 1
    while k < n:
        k2 = min(2 * k, n)
        e = F.neg(mullow(F, D[:k2], g, k2))
        e[0] = F.add(e[0], F.embed(2))
        g = mullow(F, g, e, k2)
        k = k2
    return g[:n]


# ------------------------------------------------------------- product tree


def _pair_products(F: ExtField, Dl: np.ndarray, Dr: np.ndarray) -> np.ndarray:
    """``Dl * Dr`` for length ``s + 1`` factors, via a cyclic product of ``2s`` rows.

    Only row ``2s`` wraps onto row 0, and both of those are single products of
    end coefficients, so they are patched in directly.
    """
    k, l1, d = Dl.shape
    s = l1 - 1
    if s <= SMALL_POLY or not _fft_ok(F, l1, l1, 2 * s):
        return polmul_batch(F, Dl, Dr)
    mid = _fft_rows(F, Dl, Dr, 2 * s, 0, 2 * s)
    if mid is None:
        return polmul_batch(F, Dl, Dr)
    out = np.empty((k, 2 * s + 1, d), dtype=np.int64)
    out[:, 1: 2 * s] = mid[:, 1:]
    out[:, 0] = F.mul(Dl[:, 0], Dr[:, 0])
    out[:, 2 * s] = F.mul(Dl[:, s], Dr[:, s])
    return out


class _Tree:
    """Subproduct tree of ``D = prod (1 - a_i Y)`` over points padded to a power of two.

    ``levels[h]`` holds the ``D`` polynomials of all nodes at height ``h`` as a
    ``(nodes, 2**h + 1, d)`` array; padding leaves are the constant 1.
    """

    def __init__(self, F: ExtField, points: np.ndarray):
        L = len(points)
        size = _pow2(L)
        leaves = np.zeros((size, 2, F.d), dtype=np.int64)
        leaves[:, 0] = F.one
        leaves[:L, 1] = F.neg(points)
        self.F, self.L, self.size = F, L, size
        self.levels = [leaves]
        cur = leaves
        while len(cur) > 1:
            cur = _pair_products(F, cur[0::2], cur[1::2])
            self.levels.append(cur)

    @property
    def root(self) -> np.ndarray:
        return self.levels[-1][0]

    def numerator(self, x: np.ndarray) -> np.ndarray:
        """``N`` with ``N / D = sum_i x_i / (1 - a_i Y)``; length ``size``."""
        F = self.F
        N = np.zeros((self.size, 1, F.d), dtype=np.int64)
        N[: self.L, 0] = x
        for h in range(len(self.levels) - 1):
            D = self.levels[h]
            s = N.shape[1]
            N = _cross_sum(F, N[0::2], D[1::2], N[1::2], D[0::2], s)
        return N[0]

    def evaluate(self, fs: list[np.ndarray]) -> list[np.ndarray]:
        """``sum_j f_j a_i**j`` at every point ``a_i``, for each ``f`` (transposed tree walk)."""
        F = self.F
        outs = [np.zeros((self.L, F.d), dtype=np.int64) for _ in fs]
        live = [i for i, f in enumerate(fs) if len(f)]
        if not live:
            return outs
        R = max(len(fs[i]) for i in live)
        dinv = series_inverse(F, self.root, R)
        g = np.stack([mul_transposed(F, dinv, fs[i], self.size) for i in live])[:, None]
        for h in range(len(self.levels) - 2, -1, -1):
            D = self.levels[h]
            g = _split_down(F, g, D[0::2], D[1::2])
        for j, i in enumerate(live):
            outs[i] = g[j, : self.L, 0]
        return outs


def _cross_sum(F: ExtField, Nl, Dr, Nr, Dl, s: int) -> np.ndarray:
    """``Nl * Dr + Nr * Dl`` for length-``s`` numerators and length-``s + 1`` denominators."""
    k = len(Nl)
    if s > SMALL_POLY and _fft_ok(F, s, s + 1, 2 * s, terms=2):
        out = np.empty((k, 2 * s, F.d), dtype=np.int64)
        sp = _Spectra(F, 2 * s)
        for c in _chunks(k, 2 * s * F.d):
            z = sp.fwd(Nl[c]) * sp.fwd(Dr[c])
            z += sp.fwd(Nr[c]) * sp.fwd(Dl[c])
            part = sp.inv(z, 0, 2 * s)
            if part is None:
                break
            out[c] = part
        else:
            return out
    return F.add(polmul_batch(F, Nl, Dr), polmul_batch(F, Nr, Dl))


def _split_down(F: ExtField, g: np.ndarray, Dl: np.ndarray, Dr: np.ndarray) -> np.ndarray:
    """One level of the transposed walk: ``g`` of shape ``(ch, k, 2s, d)`` to ``(ch, 2k, s, d)``.

    The left child gets ``middle(Dr, g)`` and the right child ``middle(Dl, g)``.
    """
    ch, k, two_s, d = g.shape
    s = two_s // 2
    nxt = np.empty((ch, 2 * k, s, d), dtype=np.int64)
    if s > SMALL_POLY and _fft_ok(F, s + 1, two_s, two_s):
        sp = _Spectra(F, two_s)
        ok = True
        for c in _chunks(k, 2 * (ch + 2) * two_s * d):
            zl = sp.fwd(Dl[c, ::-1])
            zr = sp.fwd(Dr[c, ::-1])
            zg = sp.fwd(g[:, c])
            left = sp.inv(zg * zr, s, 2 * s)
            right = sp.inv(zg * zl, s, 2 * s)
            if left is None or right is None:
                ok = False
                break
            nxt[:, 2 * c.start: 2 * c.stop: 2] = left
            nxt[:, 2 * c.start + 1: 2 * c.stop: 2] = right
        if ok:
            return nxt
    for j in range(ch):
        nxt[j, 0::2] = middle_batch(F, Dr, g[j], s)
        nxt[j, 1::2] = middle_batch(F, Dl, g[j], s)
    return nxt


# ------------------------------------------------------ Vandermonde products


def _check_shapes(F: ExtField, points: np.ndarray, x: np.ndarray) -> None:
    if points.ndim != 2 or points.shape[1] != F.d or x.shape != points.shape:
        raise ContractError("points and vector must be (t, d) arrays of equal length")


def tv_mul_reference(F: ExtField, points: np.ndarray, x: np.ndarray, rows: int | None = None
                     ) -> np.ndarray:
    """``y_j = sum_i x_i a_i**j`` by repeated multiplication (quadratic)."""
    points = np.asarray(points, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    rows = len(points) if rows is None else rows
    out = np.zeros((rows, F.d), dtype=np.int64)
    cur = x.copy()
    for j in range(rows):
        out[j] = cur.sum(axis=0) % F.p
        if j + 1 < rows:
            cur = F.mul(cur, points)
    return out


def tv_mul(F: ExtField, points: np.ndarray, x: np.ndarray, rows: int | None = None,
           cutover: int = FAST_CUTOVER) -> np.ndarray:
    """Transposed Vandermonde product: the first ``rows`` power sums ``sum_i x_i a_i**j``."""
    points = np.asarray(points, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    if x.shape != points.shape:
        raise ContractError("points and vector must have the same shape")
    rows = len(points) if rows is None else rows
    if len(points) == 0:
        return np.zeros((rows, F.d), dtype=np.int64)
    if max(len(points), rows) <= cutover:
        return tv_mul_reference(F, points, x, rows)
    tree = _Tree(F, points)
    N = tree.numerator(x)
    return mullow(F, N, series_inverse(F, tree.root, rows), rows)


def _require_distinct(points: np.ndarray) -> None:
    if len(np.unique(points, axis=0)) != len(points):
        raise ContractError("Vandermonde points must be pairwise distinct")


def tv_solve_reference(F: ExtField, points: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve the transposed Vandermonde system by Gaussian elimination (cubic)."""
    points = np.asarray(points, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_shapes(F, points, b)
    _require_distinct(points)
    t = len(points)
    # augmented matrix stored column-major: M[i, j] = a_i**j for i < t, M[t] = b
    M = np.zeros((t + 1, t, F.d), dtype=np.int64)
    cur = np.broadcast_to(F.one, points.shape).copy()
    for j in range(t):
        M[:t, j] = cur
        cur = F.mul(cur, points)
    M[t] = b
    # Gauss-Jordan in float64 without reducing the bulk: only the pivot row and
    # column are reduced mod p, so every entry stays below t d p^2 (exact)
    p = F.p
    if (t + 1) * F.d * p * p >= 1 << 52:
        raise ContractError("system too large for the exact float64 reference")
    M = M.astype(np.float64)
    for col in range(t):
        column = np.mod(M[col], p).astype(np.int64)
        nz = np.flatnonzero(np.any(column[col:], axis=-1))
        if len(nz) == 0:
            raise ContractError("singular Vandermonde system")
        piv = col + int(nz[0])
        if piv != col:
            M[:, [col, piv]] = M[:, [piv, col]]
            column[[col, piv]] = column[[piv, col]]
        row = np.mod(M[col:, col], p).astype(np.int64)
        row = F.mul(row, F.inv(column[col]))
        M[col:, col] = row
        column[col] = 0
        # columns left of col are already reduced, so only the rest changes
        M[col:] -= F.outer_mul(row, column, reduce=False)
    return np.mod(M[t], p).astype(np.int64)


def _solve_from_tree(F: ExtField, tree: _Tree, b: np.ndarray, evaluate) -> np.ndarray:
    L = tree.L
    D = tree.root[: L + 1]
    N = mullow(F, b, D, L)
    n_rev = N[::-1]
    P = D[::-1]
    dP = F.mul(P[1:], F.embed_many(np.arange(1, L + 1)))
    num, den = evaluate([n_rev, dP])
    return F.mul(num, F.inv_many(den))


def tv_solve(F: ExtField, points: np.ndarray, b: np.ndarray, cutover: int = FAST_CUTOVER
             ) -> np.ndarray:
    """The unique ``x`` with ``tv_mul(points, x) = b``; points must be distinct.

    Uses ``x_i = N~(a_i) / P'(a_i)`` where ``D = prod (1 - a_i Y)``,
    ``N = b * D mod Y^t``, ``N~`` is ``N`` reversed and ``P = prod (Z - a_i)``.
    """
    points = np.asarray(points, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_shapes(F, points, b)
    _require_distinct(points)
    if len(points) == 0:
        return b.copy()
    if len(points) <= cutover:
        D = _naive_subproduct(F, points)
        return _solve_naive(F, points, b, D)
    tree = _Tree(F, points)
    return _solve_from_tree(F, tree, b, tree.evaluate)


def _naive_subproduct(F: ExtField, points: np.ndarray) -> np.ndarray:
    D = np.zeros((1, F.d), dtype=np.int64)
    D[0] = F.one
    for a in points:
        nxt = np.zeros((len(D) + 1, F.d), dtype=np.int64)
        nxt[:-1] = D
        nxt[1:] = F.sub(nxt[1:], F.mul(D, a))
        D = nxt
    return D


def _horner(F: ExtField, f: np.ndarray, points: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(points)
    for c in f[::-1]:
        acc = F.add(F.mul(acc, points), c)
    return acc


def _solve_naive(F: ExtField, points, b, D) -> np.ndarray:
    L = len(points)
    N = mullow(F, b, D, L)
    P = D[::-1]
    dP = F.mul(P[1:], F.embed_many(np.arange(1, L + 1)))
    return F.mul(_horner(F, N[::-1], points), F.inv_many(_horner(F, dP, points)))


# ------------------------------------------------- sparse polynomials


def sparse_evaluate(F: ExtField, exps, coeffs: np.ndarray, omega: np.ndarray, t: int
                    ) -> np.ndarray:
    """``(A(omega**0), ..., A(omega**(t-1)))`` for ``A = sum coeffs_k X**exps_k``."""
    exps = np.asarray(exps, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.int64).reshape(len(exps), F.d)
    if len(exps) == 0:
        return np.zeros((t, F.d), dtype=np.int64)
    points = F.pow_many(omega, exps)
    return tv_mul(F, points, coeffs, rows=t)


def sparse_interpolate(F: ExtField, values: np.ndarray, T, omega: np.ndarray
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients on ``T`` of the unique polynomial with support in ``T`` and the given values.

    Returns ``(exponents, coefficients)`` with zero coefficients pruned.
    """
    T = np.asarray(T, dtype=np.int64)
    if len(T) > 1 and not np.all(T[1:] > T[:-1]):
        raise ContractError("exponent set must be strictly increasing")
    values = np.asarray(values, dtype=np.int64)
    if len(values) != len(T):
        raise ContractError("need exactly one value per exponent")
    if len(T) == 0:
        return T, np.zeros((0, F.d), dtype=np.int64)
    coeffs = tv_solve(F, F.pow_many(omega, T), values)
    keep = np.any(coeffs, axis=-1)
    return T[keep], coeffs[keep]


def field_sparse_conv(F: ExtField, a: tuple, b: tuple, T, omega: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
    """``A * B`` over the field given a superset ``T`` of its support.

    ``a`` and ``b`` are ``(exponents, coefficients)`` pairs; both are evaluated
    at ``omega**0 .. omega**(|T|-1)``, multiplied pointwise and interpolated on
    ``T``.  ``omega`` must have order at least the largest exponent in ``T``
    plus one.
    """
    T = np.asarray(T, dtype=np.int64)
    t = len(T)
    if t == 0:
        return T, np.zeros((0, F.d), dtype=np.int64)
    va = sparse_evaluate(F, a[0], a[1], omega, t)
    vb = sparse_evaluate(F, b[0], b[1], omega, t)
    return sparse_interpolate(F, F.mul(va, vb), T, omega)
