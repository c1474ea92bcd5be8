"""Sparse and dense integer vectors plus the small transforms every engine uses.

A :class:`SparseVec` is canonical at all times: indices strictly increasing
and inside ``[0, length)``, values nonzero Python integers.  Dense vectors are
plain sequences (lists or numpy arrays) of exact integers.
"""

from __future__ import annotations

from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ContractError, GuardError

#: default refusal threshold for materialising a dense vector
DENSE_GUARD = 1 << 26

_EMPTY_IDX = np.zeros(0, dtype=np.int64)
_EMPTY_IDX.flags.writeable = False


def _obj(values) -> np.ndarray:
    arr = np.empty(len(values), dtype=object)
    arr[:] = [int(v) for v in values]
    return arr


class Norms(NamedTuple):
    l0: int
    l1: int
    linf: int


class SparseVec:
    """Length-annotated sparse vector of exact integers.

    ``indices`` is a read-only int64 array, ``values`` a read-only object array
    holding Python ints.  Use :meth:`from_pairs` or :meth:`from_arrays` when
    the input may be unsorted or contain duplicates and zeros.
    """

    __slots__ = ("length", "indices", "values")

    def __init__(self, length: int, indices: Sequence[int] = (), values: Sequence[int] = ()):
        length = int(length)
        if length < 0:
            raise ContractError(f"negative length {length}")
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        vals = values if isinstance(values, np.ndarray) and values.dtype == object else _obj(values)
        if len(idx) != len(vals):
            raise ContractError("indices and values differ in length")
        if len(idx):
            if idx[0] < 0 or idx[-1] >= length:
                raise ContractError(f"index out of range [0, {length})")
            if len(idx) > 1 and not bool(np.all(idx[1:] > idx[:-1])):
                raise ContractError("indices must be strictly increasing")
            if any(v == 0 for v in vals):
                raise ContractError("stored values must be nonzero")
        idx = idx.copy()
        idx.flags.writeable = False
        vals = vals.copy()
        vals.flags.writeable = False
        self.length = length
        self.indices = idx
        self.values = vals

    @classmethod
    def _trusted(cls, length: int, idx: np.ndarray, vals: np.ndarray) -> "SparseVec":
        # caller guarantees canonical form
        self = object.__new__(cls)
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        idx.flags.writeable = False
        if vals.dtype != object:
            vals = vals.astype(object)
        vals.flags.writeable = False
        self.length = int(length)
        self.indices = idx
        self.values = vals
        return self

    @classmethod
    def empty(cls, length: int) -> "SparseVec":
        return cls._trusted(length, _EMPTY_IDX, np.empty(0, dtype=object))

    @classmethod
    def from_arrays(cls, length: int, indices, values) -> "SparseVec":
        """Build from possibly unsorted/duplicated entries; duplicates are summed."""
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        vals = values if isinstance(values, np.ndarray) and values.dtype == object else _obj(values)
        if len(idx) != len(vals):
            raise ContractError("indices and values differ in length")
        if len(idx) == 0:
            return cls.empty(length)
        if idx.min() < 0 or idx.max() >= length:
            raise ContractError(f"index out of range [0, {length})")
        uniq, inv = np.unique(idx, return_inverse=True)
        if len(uniq) == len(idx):
            order = np.argsort(idx, kind="stable")
            idx, vals = idx[order], vals[order]
        else:
            acc = np.zeros(len(uniq), dtype=object)
            np.add.at(acc, inv, vals)
            idx, vals = uniq, acc
        keep = vals != 0
        if not keep.all():
            idx, vals = idx[keep], vals[keep]
        return cls._trusted(length, idx, vals)

    @classmethod
    def from_pairs(cls, length: int, pairs: Iterable[tuple[int, int]]) -> "SparseVec":
        pairs = list(pairs)
        return cls.from_arrays(length, [i for i, _ in pairs], [v for _, v in pairs])

    @classmethod
    def from_dict(cls, length: int, entries: Mapping[int, int]) -> "SparseVec":
        return cls.from_arrays(length, list(entries.keys()), list(entries.values()))

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def items(self) -> list[tuple[int, int]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dict(self) -> dict[int, int]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def get(self, i: int) -> int:
        pos = int(np.searchsorted(self.indices, i))
        if pos < self.nnz and self.indices[pos] == i:
            return self.values[pos]
        return 0

    def is_nonnegative(self) -> bool:
        return all(v > 0 for v in self.values)

    def with_length(self, length: int) -> "SparseVec":
        if self.nnz and self.indices[-1] >= length:
            raise ContractError(f"entries do not fit length {length}")
        return SparseVec._trusted(length, self.indices, self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVec):
            return NotImplemented
        return (
            self.length == other.length
            and np.array_equal(self.indices, other.indices)
            and self.values.tolist() == other.values.tolist()
        )

    def __hash__(self) -> int:
        return hash((self.length, tuple(self.indices.tolist()), tuple(self.values.tolist())))

    def __repr__(self) -> str:
        body = ", ".join(f"({i}, {v})" for i, v in self.items()[:8])
        more = ", ..." if self.nnz > 8 else ""
        return f"SparseVec(n={self.length}, [{body}{more}])"


def norms(v: SparseVec) -> Norms:
    if v.nnz == 0:
        return Norms(0, 0, 0)
    absv = [abs(x) for x in v.values.tolist()]
    return Norms(v.nnz, sum(absv), max(absv))


def mass(v: SparseVec) -> int:
    return sum(v.values.tolist())


def derivative(v: SparseVec, d: int) -> SparseVec:
    """Scale entry ``i`` by ``i**d`` (the entry at index 0 vanishes for d >= 1)."""
    if d < 0:
        raise ContractError("derivative order must be nonnegative")
    if d == 0 or v.nnz == 0:
        return v
    idx, vals = v.indices, v.values
    if idx[0] == 0:
        idx, vals = idx[1:], vals[1:]
    return SparseVec._trusted(v.length, idx, vals * idx.astype(object) ** d)


def fold_half(v: SparseVec) -> SparseVec:
    """Fold into length ``ceil(n/2)`` by adding entry ``i + ceil(n/2)`` onto ``i``."""
    if v.length < 1:
        raise ContractError("fold_half needs length >= 1")
    half = (v.length + 1) // 2
    return SparseVec.from_arrays(half, v.indices % half, v.values)


def support_indicator(v: SparseVec) -> SparseVec:
    """Same support, every value replaced by 1."""
    ones = np.empty(v.nnz, dtype=object)
    ones[:] = 1
    return SparseVec._trusted(v.length, v.indices, ones)


def to_dense(v: SparseVec, guard: int = DENSE_GUARD) -> list[int]:
    if v.length > guard:
        raise GuardError(f"dense length {v.length} exceeds guard {guard}")
    out = [0] * v.length
    for i, x in zip(v.indices.tolist(), v.values.tolist()):
        out[i] = x
    return out


def from_dense(values: Sequence[int], n: int | None = None) -> SparseVec:
    n = len(values) if n is None else n
    if len(values) > n:
        raise ContractError(f"dense vector of length {len(values)} does not fit n={n}")
    nz = [(i, int(x)) for i, x in enumerate(values) if x != 0]
    return SparseVec._trusted(
        n, np.array([i for i, _ in nz], dtype=np.int64), _obj([x for _, x in nz])
    )


def require_nonnegative(*vecs: SparseVec) -> None:
    for v in vecs:
        if not v.is_nonnegative():
            raise ContractError("inputs must be nonnegative")


def conv_length(a: SparseVec, b: SparseVec) -> int:
    """Length of the linear convolution, ``|a| + |b| - 1`` (0 if either is empty)."""
    if a.length == 0 or b.length == 0:
        return 0
    return a.length + b.length - 1
