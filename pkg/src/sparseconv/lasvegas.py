"""Randomised, always-correct sparse convolution of nonnegative vectors.

Every driver maintains a candidate ``C`` with ``0 <= C <= A * B`` and stops
only once ``sum(C) == sum(A) * sum(B)``; for nonnegative vectors that forces
``C == A * B``, so the output never depends on luck, only the running time
does.  Vectors ``R`` and ``C`` are plain dicts keyed by output index.

The per-round kernel hashes ``A`` and ``B`` into ``m`` buckets together with
their first and second derivatives, forms the six bucket products with one
GMP multiplication each (Kronecker substitution), and reads off every bucket
whose moments pass the 1-sparsity test.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import SparseVec, conv_length, require_nonnegative
from .dense import fold_slots, limbs_to_ints, pack_at, slot_width, unpack_limbs
from .errors import ContractError, GuardError, InvariantError
from .hashing import PrimeHash, sample_linear, sample_prime_hash
from .sparsity import BucketMoments, One, classify, classify_buckets

#: default cap on the number of buckets a single round may allocate
MEMORY_GUARD = 1 << 24

#: debug only: ``hook(x, y, z)`` may mutate the bucket moment arrays of every
#: round before classification (used by the self-test's fault injection)
FAULT_HOOK = None


@dataclass
class LvConfig:
    epsilon: Fraction | float = Fraction(1, 2)
    memory_guard: int = MEMORY_GUARD
    seed: int | None = 0
    #: debug only: the true product, checked against C at every loop boundary
    oracle: dict | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")
        if self.memory_guard < 2:
            raise ContractError("memory guard must allow at least two buckets")


@dataclass
class EngineReport:
    algorithm: str = ""
    seed: int | None = None
    m_values: list = field(default_factory=list)
    iterations: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)
    final_nnz: int = 0

    def count(self, phase: str, k: int = 1) -> None:
        self.iterations[phase] = self.iterations.get(phase, 0) + k

    def visit(self, m: int) -> None:
        self.m_values.append(m)

    @property
    def max_m(self) -> int:
        return max(self.m_values, default=0)

    def summary(self) -> str:
        rounds = ",".join(f"{k}:{v}" for k, v in sorted(self.iterations.items())) or "-"
        secs = ",".join(f"{k}:{v:.3f}" for k, v in sorted(self.seconds.items())) or "-"
        return (f"algo={self.algorithm} seed={self.seed} max_m={self.max_m} rounds={rounds} "
                f"phase_seconds={secs} nnz={self.final_nnz}")


class _Clock:
    def __init__(self, report: EngineReport | None, phase: str):
        self.report, self.phase = report, phase

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        if self.report is not None:
            dt = time.perf_counter() - self.t0
            self.report.seconds[self.phase] = self.report.seconds.get(self.phase, 0.0) + dt


# ------------------------------------------------------------------ helpers


def _log2(x: int) -> float:
    return math.log2(x) if x > 1 else 0.0


def _mass(v: SparseVec) -> int:
    return sum(v.values.tolist())


def _dict_to_vec(length: int, d: dict) -> SparseVec:
    if not d:
        return SparseVec.empty(length)
    keys = sorted(d)
    return SparseVec._trusted(length, np.array(keys, dtype=np.int64),
                              np.array([d[k] for k in keys], dtype=object))


def _check_safe(C: dict, cfg: LvConfig | None, where: str, touched=None) -> None:
    # entries outside ``touched`` were already checked at an earlier boundary
    if cfg is None or cfg.oracle is None:
        return
    for i in C if touched is None else touched:
        v = C.get(i, 0)
        if not 0 <= v <= cfg.oracle.get(i, 0):
            raise InvariantError(f"unsafe candidate at index {i} after {where}: {v}")


def _check_guard(m: int, cfg: LvConfig | None) -> None:
    guard = MEMORY_GUARD if cfg is None else cfg.memory_guard
    if m > guard:
        raise GuardError(f"bucket count {m} exceeds memory guard {guard}")


def _max_update(C: dict, R: dict) -> None:
    for i, v in R.items():
        if v > C.get(i, 0):
            C[i] = v


def _run_starts(sorted_keys: np.ndarray) -> np.ndarray:
    """Positions where a new run of equal keys begins."""
    mask = np.empty(len(sorted_keys), dtype=bool)
    mask[0] = True
    np.not_equal(sorted_keys[1:], sorted_keys[:-1], out=mask[1:])
    return np.flatnonzero(mask)


class _Operand:
    """A nonnegative input with its derivative values precomputed once per driver."""

    __slots__ = ("vec", "idx", "keys", "v0", "v1", "v2", "lists", "totals")

    def __init__(self, vec: SparseVec):
        i = vec.indices.astype(object)
        self.vec = vec
        self.idx = vec.indices
        self.keys = vec.indices.tolist()
        self.v0 = vec.values
        self.v1 = self.v0 * i
        self.v2 = self.v1 * i
        self.lists = (self.v0.tolist(), self.v1.tolist(), self.v2.tolist())
        self.totals = tuple(sum(x) for x in self.lists)

    @classmethod
    def from_dict(cls, d: dict) -> "_Operand":
        keys = sorted(d)
        return cls(SparseVec._trusted(max(keys, default=-1) + 1, np.array(keys, dtype=np.int64),
                                      np.array([d[k] for k in keys], dtype=object)))


class _Moments:
    """An operand hashed into buckets: per-bucket sums of ``v``, ``i v``, ``i^2 v``."""

    __slots__ = ("buckets", "v0", "v1", "v2", "totals")

    def __init__(self, h, op: _Operand):
        self.totals = op.totals
        if len(op.idx) == 0:
            self.buckets = np.zeros(0, dtype=np.int64)
            self.v0 = self.v1 = self.v2 = np.zeros(0, dtype=object)
            return
        b = h.buckets(op.idx)
        order = np.argsort(b, kind="stable")
        b = b[order]
        starts = _run_starts(b)
        if len(starts) == len(b):
            self.buckets = b
            self.v0, self.v1, self.v2 = op.v0[order], op.v1[order], op.v2[order]
        else:
            self.buckets = b[starts]
            self.v0, self.v1, self.v2 = (np.add.reduceat(v[order], starts)
                                         for v in (op.v0, op.v1, op.v2))


#: rounds whose bucket-pair count is at most this run in plain integer code
SMALL_PAIRS = 96


def _small_round(h, m: int, oa: _Operand, ob: _Operand, oc: _Operand | None,
                 max_index: int) -> dict:
    """Plain-integer round for when only a handful of bucket pairs are occupied."""
    if m == 1 or getattr(h, "m_eff", 0) == 1:
        # every key lands in bucket 0
        sa = [(0, *oa.totals)]
        sb = [(0, *ob.totals)]
        sc = [(0, *oc.totals)] if oc is not None else []
    else:
        sa, sb = _bucket_rows(h, oa), _bucket_rows(h, ob)
        sc = _bucket_rows(h, oc) if oc is not None else []
    acc: dict = {}
    for ka, a0, a1, a2 in sa:
        for kb, b0, b1, b2 in sb:
            k = (ka + kb) % m
            cur = acc.get(k)
            if cur is None:
                acc[k] = [a0 * b0, a1 * b0 + a0 * b1, a2 * b0 + 2 * a1 * b1 + a0 * b2]
            else:
                cur[0] += a0 * b0
                cur[1] += a1 * b0 + a0 * b1
                cur[2] += a2 * b0 + 2 * a1 * b1 + a0 * b2
    for k, c0, c1, c2 in sc:
        cur = acc.setdefault(k, [0, 0, 0])
        cur[0] -= c0
        cur[1] -= c1
        cur[2] -= c2
    if FAULT_HOOK is not None:
        rows = list(acc.values())
        x, y, z = (np.array([r[j] for r in rows], dtype=object) for j in range(3))
        return _recover(x, y, z, max_index)
    R: dict = {}
    for x, y, z in acc.values():
        v = classify(BucketMoments(x, y, z), max_index)
        if type(v) is One:
            R[v.index] = R.get(v.index, 0) + v.value
    return R


def _bucket_rows(h, op: _Operand) -> list:
    hm = _Moments(h, op)
    return list(zip(hm.buckets.tolist(), hm.v0.tolist(), hm.v1.tolist(), hm.v2.tolist()))


def _bucket_products(ha: _Moments, hb: _Moments, m: int | None, count: int):
    """Bucket moments ``X, Y, Z`` of ``h(A) * h(B)``, wrapped mod ``m`` if given.

    ``count`` is the number of output slots before wrapping.  Returns the
    sorted buckets where ``X`` is nonzero and the three object arrays there.
    """
    ta, tb = ha.totals, hb.totals
    empty = np.zeros(0, dtype=np.int64), *(np.zeros(0, dtype=object),) * 3
    if ta[0] == 0 or tb[0] == 0:
        return empty
    # one slot width holding every product's total mass, so each vector is packed once
    w = slot_width(max(ta[0] * tb[0], ta[1] * tb[0] + ta[0] * tb[1],
                       ta[2] * tb[0] + 2 * ta[1] * tb[1] + ta[0] * tb[2]))
    la = int(ha.buckets[-1]) + 1
    lb = int(hb.buckets[-1]) + 1
    pa0, pa1, pa2 = (pack_at(ha.buckets, v, la, w) for v in (ha.v0, ha.v1, ha.v2))
    pb0, pb1, pb2 = (pack_at(hb.buckets, v, lb, w) for v in (hb.v0, hb.v1, hb.v2))
    X = pa0 * pb0
    Y = pa1 * pb0 + pa0 * pb1
    Z = pa2 * pb0 + 2 * (pa1 * pb1) + pa0 * pb2
    slots = min(count, la + lb - 1)
    if m is not None and la + lb - 1 > m:
        X, Y, Z = (fold_slots(P, m, w) for P in (X, Y, Z))
        slots = m
    xl = unpack_limbs(X, slots, w)
    nz = np.flatnonzero(xl.any(axis=1))
    if len(nz) == 0:
        return empty
    x = limbs_to_ints(xl[nz])
    y = limbs_to_ints(unpack_limbs(Y, slots, w)[nz])
    z = limbs_to_ints(unpack_limbs(Z, slots, w)[nz])
    return nz, x, y, z


#: bucket-pair products win over packed multiplication below this many pairs per bucket
PAIRS_PER_BUCKET = 3
_PAIR_CHUNK = 1 << 20


def _pair_products(ha: _Moments, hb: _Moments, m: int):
    """Same result as :func:`_bucket_products` (with wrapping), by enumerating bucket pairs.

    Cheaper when both hashed vectors are sparse: cost is proportional to the
    number of occupied-bucket pairs rather than to ``m``.
    """
    empty = np.zeros(0, dtype=np.int64), *(np.zeros(0, dtype=object),) * 3
    if len(ha.buckets) == 0 or len(hb.buckets) == 0:
        return empty
    if len(ha.buckets) > len(hb.buckets):
        ha, hb = hb, ha
    rows = max(1, _PAIR_CHUNK // len(hb.buckets))
    outer = np.multiply.outer
    ks, xs, ys, zs = [], [], [], []
    for r in range(0, len(ha.buckets), rows):
        sl = slice(r, r + rows)
        a0, a1, a2 = ha.v0[sl], ha.v1[sl], ha.v2[sl]
        ks.append(((ha.buckets[sl, None] + hb.buckets[None, :]) % m).ravel())
        xs.append(outer(a0, hb.v0).ravel())
        ys.append((outer(a1, hb.v0) + outer(a0, hb.v1)).ravel())
        zs.append((outer(a2, hb.v0) + 2 * outer(a1, hb.v1) + outer(a0, hb.v2)).ravel())
    k = np.concatenate(ks)
    order = np.argsort(k, kind="stable")
    k = k[order]
    starts = _run_starts(k)
    x, y, z = (np.add.reduceat(np.concatenate(v)[order], starts) for v in (xs, ys, zs))
    keep = x != 0
    if not keep.all():
        starts, x, y, z = starts[keep], x[keep], y[keep], z[keep]
    return k[starts], x, y, z


def _products(ha: _Moments, hb: _Moments, m: int):
    if len(ha.buckets) * len(hb.buckets) <= PAIRS_PER_BUCKET * m:
        return _pair_products(ha, hb, m)
    return _bucket_products(ha, hb, m, 2 * m - 1)


def _recover(x, y, z, max_index: int) -> dict:
    """Sum the payloads of all buckets that pass the 1-sparsity test."""
    if FAULT_HOOK is not None:
        FAULT_HOOK(x, y, z)
    ok, pos = classify_buckets(x, y, z, max_index)
    R: dict = {}
    for i, v in zip(pos[ok].tolist(), x[ok].tolist()):
        R[i] = R.get(i, 0) + v
    return R


def exact_product(a: SparseVec, b: SparseVec) -> dict:
    """``A * B`` computed exactly by one Kronecker multiplication (no hashing)."""
    n_out = conv_length(a, b)
    if a.nnz == 0 or b.nnz == 0:
        return {}
    w = slot_width(min(a.nnz, b.nnz) * max(a.values.tolist()) * max(b.values.tolist()))
    big = (pack_at(a.indices, a.values, int(a.indices[-1]) + 1, w)
           * pack_at(b.indices, b.values, int(b.indices[-1]) + 1, w))
    slots = min(n_out, int(a.indices[-1]) + int(b.indices[-1]) + 1)
    limbs = unpack_limbs(big, slots, w)
    nz = np.flatnonzero(limbs.any(axis=1))
    return dict(zip(nz.tolist(), limbs_to_ints(limbs[nz]).tolist()))


def _dense_fallback(a: SparseVec, b: SparseVec, cfg: LvConfig | None) -> dict:
    _check_guard(conv_length(a, b), cfg)
    return exact_product(a, b)


# ------------------------------------------------------------ single rounds


def _pairs(m: int, oa: _Operand, ob: _Operand) -> int:
    return min(m, len(oa.keys)) * min(m, len(ob.keys))


def _linear_round(oa: _Operand, ob: _Operand, m: int, rng, n_out: int) -> dict:
    h = sample_linear(n_out, m, rng)
    if _pairs(m, oa, ob) <= SMALL_PAIRS:
        return _small_round(h, m, oa, ob, None, n_out)
    _, x, y, z = _products(_Moments(h, oa), _Moments(h, ob), m)
    return _recover(x, y, z, n_out)


#: rounds at this many buckets or fewer may be computed together by _batch_rounds
BATCH_M = 16
BATCH_ROUNDS = 128


def _bucket_ids(hashes: list, idx: np.ndarray) -> np.ndarray:
    """``(K, len(idx))`` bucket numbers, one row per linear hash."""
    h0 = hashes[0]
    if h0.N > 1 << 64:
        return np.stack([h.buckets(idx) for h in hashes])
    # all hashes of one round size share N and m_eff; wrapping uint64 products reduce mod N
    mult = np.array([h.a for h in hashes], dtype=np.uint64)[:, None]
    prod = mult * idx.astype(np.uint64)[None, :] & np.uint64(h0.N - 1)
    return (prod % np.uint64(h0.m_eff)).astype(np.int64)


def _bucket_sums(keys: np.ndarray, v: np.ndarray, size: int) -> np.ndarray:
    """Exact per-key sums of the object array ``v`` (tiled over the rows of ``keys``)."""
    reps = len(keys) // max(len(v), 1)
    # limbs narrow enough that float64 bincount sums stay below 2**53
    bits = 52 - max(len(v), 1).bit_length()
    top = max((abs(int(x)) for x in v.tolist()), default=0).bit_length()
    out = np.zeros(size, dtype=object)
    mask = (1 << bits) - 1
    for shift in range(0, max(top, 1), bits):
        limb = np.array([(int(x) >> shift) & mask for x in v.tolist()], dtype=np.float64)
        part = np.bincount(keys, weights=np.tile(limb, reps), minlength=size)
        out += part.astype(np.int64).astype(object) << shift
    return out


def _batch_rounds(oa: _Operand, ob: _Operand, m: int, hashes: list, max_index: int) -> list:
    """``R`` of one linear round per hash, all at bucket count ``m``, in one pass.

    Gives the same dicts as calling :func:`_linear_round` with each hash in turn.
    """
    K = len(hashes)
    offsets = (np.arange(K, dtype=np.int64) * m)[:, None]

    def moments(op):
        keys = (_bucket_ids(hashes, op.idx) + offsets).ravel()
        return [_bucket_sums(keys, v, K * m).reshape(K, m) for v in (op.v0, op.v1, op.v2)]

    a0, a1, a2 = moments(oa)
    b0, b1, b2 = moments(ob)
    X, Y, Z = (np.zeros((K, m), dtype=object) for _ in range(3))
    for s in range(m):
        # bucket s of h(A) against every bucket of h(B), wrapped mod m
        if not a0[:, s].any():
            continue
        r0, r1, r2 = (np.roll(v, s, axis=1) for v in (b0, b1, b2))
        c0, c1, c2 = a0[:, s:s + 1], a1[:, s:s + 1], a2[:, s:s + 1]
        X += c0 * r0
        Y += c1 * r0 + c0 * r1
        Z += c2 * r0 + 2 * c1 * r1 + c0 * r2
    ok, pos = classify_buckets(X.ravel(), Y.ravel(), Z.ravel(), max_index)
    Rs: list = [{} for _ in range(K)]
    hit = np.flatnonzero(ok)
    for f, i, v in zip(hit.tolist(), pos[hit].tolist(), X.ravel()[hit].tolist()):
        R = Rs[f // m]
        R[i] = R.get(i, 0) + v
    return Rs


def approx_conv_linear(a: SparseVec, b: SparseVec, m: int, rng) -> SparseVec:
    """One linear-hashing round: a vector ``R`` with ``0 <= R <= A * B``.

    Each coordinate is exact with good probability once ``m`` is a constant
    factor above the output sparsity.  ``m`` at least the output length is
    clamped to ``n' - 1`` buckets so the hash stays well defined.
    """
    require_nonnegative(a, b)
    if m < 1:
        raise ContractError("m must be >= 1")
    n_out = conv_length(a, b)
    if a.nnz == 0 or b.nnz == 0:
        return SparseVec.empty(n_out)
    return _dict_to_vec(n_out, _linear_round(_Operand(a), _Operand(b), min(m, n_out), rng, n_out))


def _residual_round(oa: _Operand, ob: _Operand, C: dict, m: int, rng, n_out: int) -> dict:
    h = sample_prime_hash(m, rng)
    oc = _Operand.from_dict(C) if C else None
    if _pairs(h.p, oa, ob) <= SMALL_PAIRS:
        return _small_round(h, h.p, oa, ob, oc, n_out)
    nz, x, y, z = _products(_Moments(h, oa), _Moments(h, ob), h.p)
    if oc is not None:
        hc = _Moments(h, oc)
        pos = np.searchsorted(nz, hc.buckets)
        pos_ok = pos < len(nz)
        hit = np.zeros(len(pos), dtype=bool)
        hit[pos_ok] = nz[pos[pos_ok]] == hc.buckets[pos_ok]
        if not hit.all():
            # C has mass where A * B has none, so C <= A * B is already broken
            raise InvariantError("residual candidate exceeds the product")
        x, y, z = x.copy(), y.copy(), z.copy()
        x[pos] -= hc.v0
        y[pos] -= hc.v1
        z[pos] -= hc.v2
    return _recover(x, y, z, n_out)


def residual_recover(a: SparseVec, b: SparseVec, c: SparseVec, m: int, rng) -> SparseVec:
    """One prime-hashing round on the residual: ``0 <= R <= A * B - C``.

    Requires ``A * B - C`` to be nonnegative.
    """
    require_nonnegative(a, b)
    if m < 2:
        raise ContractError("m must be >= 2")
    n_out = conv_length(a, b)
    if a.nnz == 0 or b.nnz == 0:
        return SparseVec.empty(n_out)
    return _dict_to_vec(n_out, _residual_round(_Operand(a), _Operand(b), c.to_dict(), m, rng, n_out))


# ------------------------------------------------------------------ drivers


def _start(a, b, name, cfg, report):
    require_nonnegative(a, b)
    if report is not None:
        report.algorithm = name
        report.seed = None if cfg is None else cfg.seed
    return conv_length(a, b), _mass(a) * _mass(b)


def _finish(n_out: int, C: dict, report: EngineReport | None) -> SparseVec:
    if report is not None:
        report.final_nnz = len(C)
    return _dict_to_vec(n_out, C)


def simple_las_vegas(a: SparseVec, b: SparseVec, rng, cfg: LvConfig | None = None,
                     report: EngineReport | None = None) -> SparseVec:
    """Doubling search over ``m``; ``2 log m`` rounds each, merged by maximum."""
    n_out, target = _start(a, b, "lv-simple", cfg, report)
    oa, ob = _Operand(a), _Operand(b)
    m = 1
    with _Clock(report, "hashing"):
        while True:
            if report is not None:
                report.visit(m)
            if m >= n_out:
                C = _dense_fallback(a, b, cfg)
                break
            _check_guard(m, cfg)
            C: dict = {}
            reps = max(1, math.ceil(2 * _log2(m)))
            for _ in range(reps):
                R = _linear_round(oa, ob, m, rng, n_out)
                _max_update(C, R)
                _check_safe(C, cfg, "linear round", R)
            if report is not None:
                report.count("hashing", reps)
            if sum(C.values()) == target:
                break
            m *= 2
    return _finish(n_out, C, report)


def _hp_rounds(oa: _Operand, ob: _Operand, m: int, reps: int, rng, n_out: int):
    """Yield ``reps`` linear-round results at ``m``; small ``m`` is computed in batches."""
    if m > BATCH_M or FAULT_HOOK is not None:
        for _ in range(reps):
            yield _linear_round(oa, ob, m, rng, n_out)
        return
    for start in range(0, reps, BATCH_ROUNDS):
        hashes = [sample_linear(n_out, m, rng) for _ in range(min(BATCH_ROUNDS, reps - start))]
        yield from _batch_rounds(oa, ob, m, hashes, n_out)


def high_prob_las_vegas(a: SparseVec, b: SparseVec, cfg: LvConfig | None, rng,
                        report: EngineReport | None = None) -> SparseVec:
    """Doubling search with a diagonal schedule that sharpens the running-time tail.

    For ``mu = 0, 1, ...`` and ``nu = 0..mu`` it runs
    ``ceil(mu * 2**(nu / (1 + eps)))`` rounds at ``m = 2**(mu - nu)``,
    keeping one global maximum ``C`` and checking the mass after every round.
    """
    cfg = cfg or LvConfig()
    n_out, target = _start(a, b, "lv-hp", cfg, report)
    C: dict = {}
    total = 0
    if target == 0:
        return _finish(n_out, C, report)
    eps = float(cfg.epsilon)
    oa, ob = _Operand(a), _Operand(b)
    mu = 0
    with _Clock(report, "hashing"):
        while True:
            for nu in range(mu + 1):
                m = 1 << (mu - nu)
                if report is not None:
                    report.visit(m)
                if m >= n_out:
                    C = _dense_fallback(a, b, cfg)
                    return _finish(n_out, C, report)
                _check_guard(m, cfg)
                reps = max(1, math.ceil(mu * 2 ** (nu / (1 + eps))))
                if m == 1:
                    # one bucket makes every round return the same R, so repeats change nothing
                    reps = 1
                for R in _hp_rounds(oa, ob, m, reps, rng, n_out):
                    for i, v in R.items():
                        old = C.get(i, 0)
                        if v > old:
                            C[i] = v
                            total += v - old
                    _check_safe(C, cfg, "linear round", R)
                    if report is not None:
                        report.count("hashing")
                    if total == target:
                        return _finish(n_out, C, report)
            mu += 1


def _fast_core(a: SparseVec, b: SparseVec, rng, cfg: LvConfig | None,
               report: EngineReport | None) -> dict:
    n_out = conv_length(a, b)
    target = _mass(a) * _mass(b)
    C: dict = {}
    if target == 0:
        return C
    lg = _log2(max(n_out, 4))
    phase1 = max(1, math.ceil(3 * _log2(lg)))
    oa, ob = _Operand(a), _Operand(b)
    m = 1
    while True:
        if report is not None:
            report.visit(m)
        if m >= n_out:
            return _dense_fallback(a, b, cfg)
        _check_guard(m, cfg)
        with _Clock(report, "linear"):
            for _ in range(phase1):
                R = _linear_round(oa, ob, m, rng, n_out)
                _max_update(C, R)
                _check_safe(C, cfg, "linear round", R)
        m2 = max(2, math.ceil(m / lg))
        reps = max(1, math.ceil(2 * _log2(m)))
        with _Clock(report, "residual"):
            for _ in range(reps):
                R = _residual_round(oa, ob, C, m2, rng, n_out)
                for i, v in R.items():
                    C[i] = C.get(i, 0) + v
                _check_safe(C, cfg, "residual round", R)
        if report is not None:
            report.count("linear", phase1)
            report.count("residual", reps)
        if sum(C.values()) == target:
            return C
        m *= 2


def fast_las_vegas(a: SparseVec, b: SparseVec, rng, cfg: LvConfig | None = None,
                   report: EngineReport | None = None) -> SparseVec:
    """Linear-hashing rounds for the bulk, then prime-hashing rounds on the residual."""
    n_out, _ = _start(a, b, "lv-fast", cfg, report)
    return _finish(n_out, _fast_core(a, b, rng, cfg, report), report)


def _cyclic(a: SparseVec, b: SparseVec, m: int, rng, cfg, report) -> dict:
    """Wrap-around product of two length-``m`` vectors via the accelerated driver."""
    out: dict = {}
    for i, v in _fast_core(a, b, rng, cfg, report).items():
        k = i % m
        out[k] = out.get(k, 0) + v
    return out


def sparse_conv(a: SparseVec, b: SparseVec, rng, cfg: LvConfig | None = None,
                report: EngineReport | None = None) -> SparseVec:
    """Top-level entry: hash into ``||A||_0^3 * ||B||_0^3`` buckets, convolve there.

    The six bucket products are themselves computed by the accelerated driver
    on the (sparse) hashed vectors; a resample happens whenever the mass check
    fails.
    """
    n_out, target = _start(a, b, "lv-full", cfg, report)
    if a.nnz == 0 or b.nnz == 0:
        return _finish(n_out, {}, report)
    m = a.nnz ** 3 * b.nnz ** 3
    if m >= n_out:
        return _finish(n_out, _fast_core(a, b, rng, cfg, report), report)
    sub = None if cfg is None else LvConfig(cfg.epsilon, cfg.memory_guard, cfg.seed)
    while True:
        if report is not None:
            report.count("reduction")
        h = sample_linear(n_out, m, rng)
        ha = _Moments(h, _Operand(a))
        hb = _Moments(h, _Operand(b))
        va = [SparseVec._trusted(m, ha.buckets, v) for v in (ha.v0, ha.v1, ha.v2)]
        vb = [SparseVec._trusted(m, hb.buckets, v) for v in (hb.v0, hb.v1, hb.v2)]
        with _Clock(report, "reduction"):
            X = _cyclic(va[0], vb[0], m, rng, sub, report)
            Y = _cyclic(va[1], vb[0], m, rng, sub, report)
            _add_into(Y, _cyclic(va[0], vb[1], m, rng, sub, report))
            Z = _cyclic(va[2], vb[0], m, rng, sub, report)
            _add_into(Z, _cyclic(va[1], vb[1], m, rng, sub, report), 2)
            _add_into(Z, _cyclic(va[0], vb[2], m, rng, sub, report))
        keys = sorted(X)
        x = np.array([X[k] for k in keys], dtype=object)
        y = np.array([Y.get(k, 0) for k in keys], dtype=object)
        z = np.array([Z.get(k, 0) for k in keys], dtype=object)
        C = _recover(x, y, z, n_out)
        _check_safe(C, cfg, "length reduction")
        if sum(C.values()) == target:
            return _finish(n_out, C, report)


def _add_into(acc: dict, other: dict, scale: int = 1) -> None:
    for k, v in other.items():
        acc[k] = acc.get(k, 0) + scale * v
