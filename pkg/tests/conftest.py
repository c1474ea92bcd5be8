import numpy as np
import pytest

from sparseconv.core import SparseVec
from sparseconv.instances import random_instance


def brute(a: SparseVec, b: SparseVec) -> SparseVec:
    """Entry-pair product written independently of the package's oracle."""
    out = {}
    for i, x in a.items():
        for j, y in b.items():
            out[i + j] = out.get(i + j, 0) + x * y
    n = a.length + b.length - 1 if a.length and b.length else 0
    return SparseVec.from_dict(n, out)


def dense_brute(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def instances(seed: int, count: int, **kw):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, **kw) for _ in range(count)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
