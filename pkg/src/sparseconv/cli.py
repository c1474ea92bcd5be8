"""Command-line front end: vector files, the brute-force oracle, engine dispatch,
self-test suites and the benchmark table.

Exit codes: 0 success, 2 parse error, 3 guard refusal, 4 contract violation,
5 internal invariant failure.
"""

from __future__ import annotations

import itertools
import math
import re
import secrets
import statistics
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import lasvegas
from .core import SparseVec, conv_length, from_dense, require_nonnegative, to_dense
from .dense import linear_conv
from .deterministic import DetReport, deterministic_conv
from .errors import ContractError, GuardError, InvariantError, ParseError, SparseConvError
from .hashing import make_rng
from .instances import random_instance, random_sparse, schoolbook_sparse
from .lasvegas import EngineReport, LvConfig

ALGOS = ("det", "lv-simple", "lv-hp", "lv-fast", "lv-full", "dense", "oracle")
MAGIC = "sparseconv 1"
#: entry pairs the oracle will enumerate before refusing
ORACLE_GUARD = 1 << 24
#: memory model behind --guard-mem: bytes charged per bucket / dense slot / entry pair
BYTES_PER_SLOT = 64

_DECIMAL = re.compile(r"-?(0|[1-9][0-9]*)\Z")


# ------------------------------------------------------------------ oracle


def oracle_conv(a: SparseVec, b: SparseVec, guard: int = ORACLE_GUARD) -> SparseVec:
    """The exact product by enumerating every entry pair."""
    if a.nnz * b.nnz > guard:
        raise GuardError(f"oracle would enumerate {a.nnz * b.nnz} pairs (guard {guard})")
    return schoolbook_sparse(a, b)


# ------------------------------------------------------------- vector files


def _decimal(tok: str, what: str, lineno: int) -> int:
    if not _DECIMAL.match(tok):
        raise ParseError(f"line {lineno}: {what} {tok!r} is not a canonical decimal")
    return int(tok)


def parse_vector(text: str) -> SparseVec:
    """Parse the ``sparseconv 1`` text format (strict: LF endings, sorted, positive values)."""
    if not text.endswith("\n"):
        raise ParseError("file must end with a line feed")
    lines = text[:-1].split("\n")
    if lines[0] != MAGIC:
        raise ParseError(f"line 1: expected header {MAGIC!r}")
    if len(lines) < 2 or not lines[1].startswith("n "):
        raise ParseError("line 2: expected 'n <decimal>'")
    n = _decimal(lines[1][2:], "length", 2)
    if n < 0:
        raise ParseError("line 2: length must be nonnegative")
    idx, vals = [], []
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split(" ")
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<index> <value>'")
        i = _decimal(parts[0], "index", lineno)
        v = _decimal(parts[1], "value", lineno)
        if i < 0 or i >= n:
            raise ParseError(f"line {lineno}: index {i} outside [0, {n})")
        if idx and i <= idx[-1]:
            raise ParseError(f"line {lineno}: indices must be strictly increasing")
        if v == 0:
            raise ParseError(f"line {lineno}: zero values must be omitted")
        if v < 0:
            raise ContractError(f"line {lineno}: negative value {v}; inputs must be nonnegative")
        idx.append(i)
        vals.append(v)
    return SparseVec(n, idx, vals)


def format_vector(v: SparseVec) -> str:
    body = "".join(f"{i} {x}\n" for i, x in v.items())
    return f"{MAGIC}\nn {v.length}\n{body}"


def read_vector(path: str | Path) -> SparseVec:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise ParseError(f"{path}: not ASCII") from None
    return parse_vector(text)


def write_vector(path: str | Path, v: SparseVec) -> None:
    Path(path).write_bytes(format_vector(v).encode("ascii"))


# ----------------------------------------------------------- engine dispatch


def parse_seed(text: str | int | None) -> int:
    if text is None:
        return 0
    if isinstance(text, int):
        seed = text
    elif text == "random":
        return secrets.randbits(64)
    else:
        try:
            seed = int(text, 0)
        except ValueError:
            raise ParseError(f"seed must be an integer in [0, 2**64) or 'random', got {text!r}") from None
    if not 0 <= seed < 1 << 64:
        raise ParseError(f"seed {seed} outside [0, 2**64)")
    return seed


def _slots(guard_mem: int | None) -> int | None:
    if guard_mem is None:
        return None
    return max(2, guard_mem // BYTES_PER_SLOT)


def run_algo(algo: str, a: SparseVec, b: SparseVec, seed: int = 0,
             guard_mem: int | None = None, epsilon: Fraction | float = Fraction(1, 2),
             oracle: dict | None = None) -> tuple[SparseVec, str]:
    """Run one engine; returns the product and a one-line report."""
    require_nonnegative(a, b)
    slots = _slots(guard_mem)
    start = time.perf_counter()
    if algo == "oracle":
        out = oracle_conv(a, b, ORACLE_GUARD if slots is None else min(ORACLE_GUARD, slots))
        line = f"algo=oracle pairs={a.nnz * b.nnz} nnz={out.nnz}"
    elif algo == "dense":
        n_out = conv_length(a, b)
        guard = lasvegas.MEMORY_GUARD if slots is None else slots
        if n_out > guard:
            raise GuardError(f"dense length {n_out} exceeds guard {guard}")
        if a.nnz == 0 or b.nnz == 0:
            out = SparseVec.empty(n_out)
        else:
            out = from_dense(linear_conv(to_dense(a, guard), to_dense(b, guard)), n_out)
        line = f"algo=dense length={n_out} nnz={out.nnz}"
    elif algo == "det":
        rep = DetReport()
        out = deterministic_conv(a, b, report=rep)
        line = rep.summary()
    elif algo in ("lv-simple", "lv-hp", "lv-fast", "lv-full"):
        cfg = LvConfig(epsilon=epsilon, seed=seed, oracle=oracle,
                       memory_guard=lasvegas.MEMORY_GUARD if slots is None else slots)
        rng = make_rng(seed)
        rep = EngineReport()
        if algo == "lv-simple":
            out = lasvegas.simple_las_vegas(a, b, rng, cfg, rep)
        elif algo == "lv-hp":
            out = lasvegas.high_prob_las_vegas(a, b, cfg, rng, rep)
        elif algo == "lv-fast":
            out = lasvegas.fast_las_vegas(a, b, rng, cfg, rep)
        else:
            out = lasvegas.sparse_conv(a, b, rng, cfg, rep)
        line = rep.summary()
    else:
        raise ContractError(f"unknown algorithm {algo!r}")
    return out, f"{line} wall={time.perf_counter() - start:.3f}"


# -------------------------------------------------------------- self-test


@dataclass
class SuiteResult:
    name: str
    passed: int
    total: int

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def _suite_sparsity(full: bool) -> SuiteResult:
    from .sparsity import BucketMoments, One, Zero, classify

    length = 6 if full else 4
    passed = total = 0
    for vec in itertools.product(range(4), repeat=length):
        x = sum(vec)
        y = sum(i * v for i, v in enumerate(vec))
        z = sum(i * i * v for i, v in enumerate(vec))
        verdict = classify(BucketMoments(x, y, z), length)
        nz = [i for i, v in enumerate(vec) if v]
        if len(nz) == 0:
            good = verdict == Zero()
        elif len(nz) == 1:
            good = verdict == One(nz[0], vec[nz[0]])
        else:
            good = not isinstance(verdict, (One, Zero))
        passed += good
        total += 1
    return SuiteResult("sparsity-exhaustive", passed, total)


def _suite_hashing(full: bool) -> SuiteResult:
    from .hashing import sample_linear, sample_prime_hash

    rng = make_rng(11)
    trials = 20000 if full else 2000
    passed = total = 0
    for _ in range(trials):
        n = int(rng.integers(2, 1 << 20))
        m = int(rng.integers(1, n + 1))
        h = sample_linear(n, m, rng)
        x, y = (int(v) for v in rng.integers(0, n, size=2))
        passed += (h(x) + h(y) - h(x + y)) % m in h.phi
        total += 1
        if m >= 2:
            g = sample_prime_hash(m, rng)
            passed += (g(x) + g(y) - g(x + y)) % g.p == 0
            total += 1
    return SuiteResult("hashing-additivity", passed, total)


def _suite_field(full: bool) -> SuiteResult:
    from .field import build_extension, multiplicative_order

    primes = (3, 5, 7, 11, 13) if full else (3, 5, 7)
    rng = make_rng(12)
    passed = total = 0
    for p in primes:
        F = build_extension(p)
        a, b, c = (F.random(rng, 64) for _ in range(3))
        checks = [
            np.array_equal(F.mul(a, F.mul(b, c)), F.mul(F.mul(a, b), c)),
            np.array_equal(F.mul(a, F.add(b, c)), F.add(F.mul(a, b), F.mul(a, c))),
            np.array_equal(F.mul(a, b), F.mul(b, a)),
        ]
        nz = F.random(rng, 32, nonzero=True)
        checks.append(bool(np.all(F.mul(nz, F.inv_many(nz)) == F.one)))
        if p >= 7:
            checks.append(multiplicative_order(F, F.omega) >= min(2 ** p, F.order - 1))
        passed += sum(bool(c) for c in checks)
        total += len(checks)
    total += 1
    passed += multiplicative_order(build_extension(3), build_extension(3).omega) == 8
    return SuiteResult("field-axioms", passed, total)


def _suite_vandermonde(full: bool) -> SuiteResult:
    from .field import build_extension
    from .vandermonde import tv_mul, tv_mul_reference, tv_solve

    F = build_extension(7)
    rng = make_rng(13)
    passed = total = 0
    for t in (1, 2, 3, 17, 64) + ((257,) if full else ()):
        e = rng.choice(F.order - 1, size=t, replace=False)
        pts = F.pow_many(F.omega, e)
        x = F.random(rng, t)
        y = tv_mul(F, pts, x, cutover=0)
        passed += np.array_equal(y, tv_mul_reference(F, pts, x))
        passed += np.array_equal(tv_solve(F, pts, y, cutover=0), x)
        total += 2
    return SuiteResult("vandermonde", passed, total)


def _suite_engines(full: bool) -> SuiteResult:
    rng = make_rng(14)
    count = 60 if full else 8
    passed = total = 0
    for _ in range(count):
        a, b = random_instance(rng, n_max=1 << 16, k_max=64 if full else 24)
        want = oracle_conv(a, b)
        oracle = want.to_dict()
        for algo in ("lv-simple", "lv-hp", "lv-fast", "lv-full", "det", "dense"):
            try:
                got, _ = run_algo(algo, a, b, seed=int(rng.integers(0, 1 << 63)), oracle=oracle)
                passed += got == want
            except SparseConvError:
                pass
            total += 1
    return SuiteResult("engine-oracle", passed, total)


SUITES = (_suite_sparsity, _suite_hashing, _suite_field, _suite_vandermonde, _suite_engines)


def _double_first_bucket(x, y, z) -> None:
    """Fault injection: double one occupied bucket, so a too-large payload is recovered."""
    nz = np.flatnonzero(x != 0)
    if len(nz):
        k = nz[0]
        x[k] *= 2
        y[k] *= 2
        z[k] *= 2


def selftest(level: str = "quick", inject_fault: bool = False) -> list[SuiteResult]:
    full = level == "full"
    previous = lasvegas.FAULT_HOOK
    if inject_fault:
        lasvegas.FAULT_HOOK = _double_first_bucket
    try:
        return [suite(full) for suite in SUITES]
    finally:
        lasvegas.FAULT_HOOK = previous


# ------------------------------------------------------------------ bench


@dataclass
class BenchRecord:
    algorithm: str
    n: int
    nnz_a: int
    nnz_b: int
    t: int
    seed: int
    seconds: float
    max_m: int
    verified: bool


def bench_instance(n: int, t: int, instance_seed: int, vmax: int = 1 << 16
                   ) -> tuple[SparseVec, SparseVec]:
    """Inputs with about ``t`` output entries: ``ceil(sqrt t)`` random entries each in ``[0, n)``."""
    k = max(1, math.isqrt(t - 1) + 1 if t > 1 else 1)
    rng = make_rng((instance_seed << 32) ^ t)
    return random_sparse(rng, n, k, vmax), random_sparse(rng, n, k, vmax)


def run_bench(t_values, algos, seed: int = 0, n: int = 1 << 24, repeats: int = 1,
              instance_seed: int = 0) -> list[BenchRecord]:
    """Time each engine on each size; every recorded run is verified first."""
    records = []
    for t in t_values:
        a, b = bench_instance(n, t, instance_seed)
        want = oracle_conv(a, b) if a.nnz * b.nnz <= ORACLE_GUARD else None
        mass = sum(a.values.tolist()) * sum(b.values.tolist())
        for algo in algos:
            for rep in range(repeats):
                run_seed = (seed + rep) % (1 << 64)
                start = time.perf_counter()
                if algo.startswith("lv-"):
                    report = EngineReport()
                    cfg = LvConfig(seed=run_seed)
                    rng = make_rng(run_seed)
                    fn = {"lv-simple": lambda: lasvegas.simple_las_vegas(a, b, rng, cfg, report),
                          "lv-hp": lambda: lasvegas.high_prob_las_vegas(a, b, cfg, rng, report),
                          "lv-fast": lambda: lasvegas.fast_las_vegas(a, b, rng, cfg, report),
                          "lv-full": lambda: lasvegas.sparse_conv(a, b, rng, cfg, report)}[algo]
                    out = fn()
                    max_m = report.max_m
                else:
                    out, _ = run_algo(algo, a, b, seed=run_seed)
                    max_m = 0
                seconds = time.perf_counter() - start
                if want is not None:
                    ok = out == want
                else:
                    ok = out.is_nonnegative() and sum(out.values.tolist()) == mass
                if not ok:
                    raise InvariantError(f"{algo} produced a wrong product at t={t}")
                records.append(BenchRecord(algo, n, a.nnz, b.nnz, out.nnz, run_seed,
                                           seconds, max_m, True))
    return records


BENCH_COLUMNS = tuple(BenchRecord.__dataclass_fields__)


def format_bench(records: list[BenchRecord]) -> str:
    rows = ["\t".join(BENCH_COLUMNS)]
    for r in records:
        d = asdict(r)
        d["seconds"] = f"{r.seconds:.6f}"
        d["verified"] = "true" if r.verified else "false"
        rows.append("\t".join(str(d[c]) for c in BENCH_COLUMNS))
    return "\n".join(rows) + "\n"


def loglog_slope(records: list[BenchRecord], algo: str) -> float:
    """Least-squares slope of log2(median seconds) against log2(t) for one engine."""
    by_t: dict = {}
    for r in records:
        if r.algorithm == algo:
            by_t.setdefault(r.t, []).append(r.seconds)
    xs = [math.log2(t) for t in sorted(by_t)]
    ys = [math.log2(statistics.median(by_t[t])) for t in sorted(by_t)]
    return statistics.linear_regression(xs, ys).slope


# -------------------------------------------------------------------- click


def _fail(exc: SparseConvError) -> None:
    kind = {2: "parse", 3: "guard", 4: "contract", 5: "invariant"}.get(exc.exit_code, "error")
    click.echo(f"error: {kind}: {exc}", err=True)
    sys.exit(exc.exit_code)


@click.group()
def main():
    """Sparse nonnegative convolution engines."""


@main.command()
@click.argument("in_a", type=click.Path(dir_okay=False))
@click.argument("in_b", type=click.Path(dir_okay=False))
@click.option("--algo", type=click.Choice(ALGOS), default="lv-full", show_default=True)
@click.option("--seed", default="0", show_default=True, help="integer in [0, 2**64) or 'random'")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="output file (default: stdout)")
@click.option("--guard-mem", type=int, default=None, help="refuse work above this many bytes")
@click.option("--epsilon", type=str, default="1/2", show_default=True, help="lv-hp tail parameter")
def multiply(in_a, in_b, algo, seed, out, guard_mem, epsilon):
    """Convolve two vector files."""
    try:
        a, b = read_vector(in_a), read_vector(in_b)
        try:
            eps = Fraction(epsilon)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"epsilon must be a rational number, got {epsilon!r}") from None
        result, line = run_algo(algo, a, b, seed=parse_seed(seed), guard_mem=guard_mem,
                                epsilon=eps)
    except SparseConvError as exc:
        _fail(exc)
    if out is None:
        click.echo(format_vector(result), nl=False)
    else:
        write_vector(out, result)
    click.echo(line, err=True)


@main.command(name="selftest")
@click.argument("level", type=click.Choice(["quick", "full"]), default="quick")
@click.option("--inject-fault", is_flag=True, hidden=True,
              help="debug: corrupt one bucket per round; the run must fail")
def selftest_cmd(level, inject_fault):
    """Run the built-in invariant suites."""
    results = selftest(level, inject_fault)
    for r in results:
        click.echo(f"{r.name}: {r.passed}/{r.total} {'ok' if r.ok else 'FAIL'}")
    sys.exit(0 if all(r.ok for r in results) else 5)


@main.command()
@click.option("--t-min", type=int, default=1 << 8, show_default=True)
@click.option("--t-max", type=int, default=1 << 16, show_default=True)
@click.option("--steps", type=int, default=5, show_default=True)
@click.option("--algos", default="lv-fast", show_default=True, help="comma-separated engines")
@click.option("--seed", default="0", show_default=True)
@click.option("--n", "length", type=int, default=1 << 24, show_default=True)
@click.option("--repeats", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="bench.tsv", show_default=True)
def bench(t_min, t_max, steps, algos, seed, length, repeats, out):
    """Time engines over geometrically spaced output sizes and write a TSV table."""
    try:
        names = [s for s in algos.split(",") if s]
        bad = [s for s in names if s not in ALGOS]
        if bad:
            raise ParseError(f"unknown algorithms: {', '.join(bad)}")
        if not 1 <= t_min <= t_max or steps < 1:
            raise ParseError("need 1 <= t-min <= t-max and steps >= 1")
        if steps == 1:
            ts = [t_min]
        else:
            ratio = (t_max / t_min) ** (1 / (steps - 1))
            ts = sorted({round(t_min * ratio ** i) for i in range(steps)})
        records = run_bench(ts, names, seed=parse_seed(seed), n=length, repeats=repeats)
    except SparseConvError as exc:
        _fail(exc)
    Path(out).write_text(format_bench(records))
    for name in names:
        if len({r.t for r in records if r.algorithm == name}) >= 2:
            click.echo(f"{name}: slope={loglog_slope(records, name):.3f}", err=True)
    click.echo(out)


if __name__ == "__main__":
    main()
