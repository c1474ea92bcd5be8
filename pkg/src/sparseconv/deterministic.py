"""Deterministic sparse convolution over extension fields with CRT.

For each prime ``p`` of a plan, the inputs are reduced mod ``p`` and
multiplied over ``F_p[X]/(X^(p-1) - beta)`` by evaluation at powers of
``omega = X + 1`` and interpolation on a known support superset ``T``.  The
exact integer coefficients come back by Chinese remaindering.  ``T`` itself
is found by folding both inputs in half, recursing, and lifting every index of
the folded product to its three possible preimages.

Nothing on this path is random.  Per-prime work may run on a thread pool
(``SPARSECONV_THREADS``, default 1); results are combined in ascending prime
order, so the output never depends on the schedule.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import SparseVec, conv_length, fold_half, require_nonnegative, support_indicator
from .errors import ContractError, InvariantError
from .field import ExtField, build_extension, crt_many
from .hashing import primes_in_range
from .lasvegas import exact_product
from .vandermonde import field_sparse_conv

THREADS_ENV = "SPARSECONV_THREADS"
#: lengths at or below this are multiplied densely
BASE_LENGTH = 8
#: lengths at or below DENSE_RATIO * (nnz(A) + nnz(B)) are also multiplied densely
DENSE_RATIO = 64


@dataclass(frozen=True)
class PrimePlan:
    primes: tuple[int, ...]
    threshold: int
    bound: int

    @property
    def k(self) -> int:
        return len(self.primes)

    @property
    def modulus(self) -> int:
        return math.prod(self.primes)

    def fields(self) -> list[ExtField]:
        return [build_extension(p) for p in self.primes]


@dataclass
class DetReport:
    algorithm: str = "det"
    levels: int = 0
    dense_levels: int = 0
    superset_sizes: list = field(default_factory=list)
    primes: tuple = ()
    seconds: float = 0.0
    final_nnz: int = 0

    def summary(self) -> str:
        return (f"algo={self.algorithm} levels={self.levels} dense_levels={self.dense_levels} "
                f"primes={','.join(map(str, self.primes))} max_T={max(self.superset_sizes, default=0)} "
                f"nnz={self.final_nnz} seconds={self.seconds:.3f}")


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ContractError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ContractError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def plan_primes(n_prime: int, bound: int) -> PrimePlan:
    """Smallest primes above ``max(ceil(log2 n'), 6)`` whose product exceeds ``bound``.

    Every prime is at least 7, and ``2**p >= 2 n'`` bounds the order of ``X + 1``
    from below, so evaluation points stay distinct on the whole output range.
    """
    threshold = max(math.ceil(math.log2(max(n_prime, 1))), 6)
    chosen: list[int] = []
    product = 1
    lo, hi = threshold + 1, 2 * threshold + 16
    while product <= bound:
        for p in primes_in_range(lo, hi).tolist():
            chosen.append(p)
            product *= p
            if product > bound:
                break
        lo, hi = hi + 1, 2 * hi
    if not chosen:
        # bound 0 (no products): one prime still fixes the field for the caller
        chosen = [int(primes_in_range(threshold + 1, 2 * threshold + 16)[0])]
    return PrimePlan(tuple(chosen), threshold, bound)


def _coefficient_bound(a: SparseVec, b: SparseVec) -> int:
    """Upper bound on ``|(A * B)_k|``."""
    if a.nnz == 0 or b.nnz == 0:
        return 0
    amax = max(abs(x) for x in a.values.tolist())
    bmax = max(abs(x) for x in b.values.tolist())
    return min(a.nnz, b.nnz) * amax * bmax


def _effective_length(a: SparseVec, b: SparseVec) -> int:
    vmax = max([abs(x) for x in a.values.tolist()] + [abs(x) for x in b.values.tolist()] + [1])
    return max(a.length, b.length, vmax)


def make_plan(a: SparseVec, b: SparseVec) -> PrimePlan:
    bound = _coefficient_bound(a, b)
    signed = not (a.is_nonnegative() and b.is_nonnegative())
    # symmetric lifting needs the modulus to exceed twice the magnitude
    return plan_primes(_effective_length(a, b), 2 * bound if signed else bound)


def _residues_for_prime(F: ExtField, a: SparseVec, b: SparseVec, T: np.ndarray) -> np.ndarray:
    p = F.p
    ea = F.embed_many((a.values % p).astype(np.int64))
    eb = F.embed_many((b.values % p).astype(np.int64))
    exps, coeffs = field_sparse_conv(F, (a.indices, ea), (b.indices, eb), T, F.omega)
    if np.any(coeffs[:, 1:]):
        raise InvariantError(f"non-constant coefficient in the F_{p} product")
    row = np.zeros(len(T), dtype=np.int64)
    row[np.searchsorted(T, exps)] = coeffs[:, 0]
    return row


def conv_with_support(a: SparseVec, b: SparseVec, T, threads: int | None = None,
                      plan: PrimePlan | None = None) -> SparseVec:
    """Exact ``A * B`` given ``T`` containing its support.

    A ``T`` missing part of the support is a caller error and gives a wrong answer.
    Signed inputs are accepted here; results are lifted to the symmetric range.
    """
    n_out = conv_length(a, b)
    T = np.unique(np.asarray(T, dtype=np.int64))
    if len(T) and (T[0] < 0 or T[-1] >= max(n_out, 1)):
        raise ContractError("support superset has indices outside the output range")
    if a.nnz == 0 or b.nnz == 0 or len(T) == 0:
        return SparseVec.empty(n_out)
    plan = make_plan(a, b) if plan is None else plan
    fields = plan.fields()
    threads = thread_count() if threads is None else threads

    def work(F):
        return _residues_for_prime(F, a, b, T)

    if threads > 1 and len(fields) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, fields))
    else:
        rows = [work(F) for F in fields]
    values = crt_many(np.stack(rows), plan.primes)
    if not (a.is_nonnegative() and b.is_nonnegative()):
        M = plan.modulus
        values = np.array([v - M if 2 * v > M else v for v in values.tolist()] or [],
                          dtype=object)
    keep = np.flatnonzero(values != 0)
    return SparseVec.from_arrays(n_out, T[keep], values[keep])


def _dense_support(a: SparseVec, b: SparseVec) -> np.ndarray:
    return np.array(sorted(exact_product(a, b)), dtype=np.int64)


def _product_on(a: SparseVec, b: SparseVec, T: np.ndarray, threads, plan=None) -> SparseVec:
    # the field path costs about |T| * p per prime; past the output length the
    # dense product is cheaper
    n_out = conv_length(a, b)
    plan = make_plan(a, b) if plan is None else plan
    if a.nnz and b.nnz and n_out <= len(T) * sum(plan.primes):
        d = exact_product(a, b)
        idx = np.array(sorted(d), dtype=np.int64)
        return SparseVec.from_arrays(n_out, idx, np.array([d[i] for i in idx.tolist()], dtype=object))
    return conv_with_support(a, b, T, threads, plan)


def _use_dense(n: int, a: SparseVec, b: SparseVec) -> bool:
    return n <= BASE_LENGTH or n <= DENSE_RATIO * (a.nnz + b.nnz)


def support_superset(a: SparseVec, b: SparseVec, threads: int | None = None,
                     report: DetReport | None = None) -> np.ndarray:
    """Sorted indices ``T`` with ``supp(A * B) <= T`` and ``|T| <= 3 |supp(A * B)|``.

    Only supports matter, so both inputs are replaced by 0/1 indicators at every
    level; this keeps the coefficient bound (and the prime count) small.
    """
    require_nonnegative(a, b)
    n_out = conv_length(a, b)
    if a.nnz == 0 or b.nnz == 0:
        return np.zeros(0, dtype=np.int64)
    n = max(a.length, b.length)
    ia = support_indicator(a).with_length(n)
    ib = support_indicator(b).with_length(n)
    if report is not None:
        report.levels += 1
    if _use_dense(n, ia, ib):
        if report is not None:
            report.dense_levels += 1
        return _dense_support(ia, ib)
    half = (n + 1) // 2
    fa, fb = support_indicator(fold_half(ia)), support_indicator(fold_half(ib))
    T_half = support_superset(fa, fb, threads, report)
    folded = _product_on(fa, fb, T_half, threads)
    k = folded.indices
    T = np.unique(np.concatenate([k, k + half, k + 2 * half]))
    # no output index lies outside [min A + min B, max A + max B]
    lo = int(ia.indices[0] + ib.indices[0])
    hi = min(int(ia.indices[-1] + ib.indices[-1]), n_out - 1)
    T = T[(T >= lo) & (T <= hi)]
    if report is not None:
        report.superset_sizes.append(len(T))
    return T


def deterministic_conv(a: SparseVec, b: SparseVec, threads: int | None = None,
                       report: DetReport | None = None) -> SparseVec:
    """Exact ``A * B`` for nonnegative inputs without any randomness."""
    start = time.perf_counter()
    require_nonnegative(a, b)
    n_out = conv_length(a, b)
    if a.nnz == 0 or b.nnz == 0:
        out = SparseVec.empty(n_out)
    else:
        T = support_superset(a, b, threads, report)
        plan = make_plan(a, b)
        if report is not None:
            report.primes = plan.primes
            report.superset_sizes.append(len(T))
        out = _product_on(a, b, T, threads, plan)
    if report is not None:
        report.seconds = time.perf_counter() - start
        report.final_nnz = out.nnz
    return out
