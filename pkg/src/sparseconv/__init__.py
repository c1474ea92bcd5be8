"""Output-sensitive convolution of sparse nonnegative integer vectors.

Las Vegas engines (always exact, randomized running time) live in
:mod:`sparseconv.lasvegas`; the deterministic finite-field engine in
:mod:`sparseconv.deterministic`.  Both are checked against the brute-force
:func:`oracle_conv`.
"""

from .cli import oracle_conv, read_vector, write_vector
from .core import SparseVec, conv_length, fold_half, norms
from .deterministic import conv_with_support, deterministic_conv, support_superset
from .errors import ContractError, GuardError, InvariantError, ParseError, SparseConvError
from .hashing import make_rng
from .lasvegas import (
    EngineReport,
    LvConfig,
    fast_las_vegas,
    high_prob_las_vegas,
    simple_las_vegas,
    sparse_conv,
)

__all__ = [
    "SparseVec", "conv_length", "fold_half", "norms",
    "sparse_conv", "simple_las_vegas", "high_prob_las_vegas", "fast_las_vegas",
    "LvConfig", "EngineReport", "make_rng",
    "deterministic_conv", "conv_with_support", "support_superset",
    "oracle_conv", "read_vector", "write_vector",
    "SparseConvError", "ParseError", "GuardError", "ContractError", "InvariantError",
]
