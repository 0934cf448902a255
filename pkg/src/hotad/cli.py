"""``hotad`` command line: derivative benchmarks and oracle checks.

    hotad bench --problem cosine --n 100000 --derivative hess --derivative tensorvec
    hotad check --problem heavey_band --n 30

Exit codes: 0 success, 1 check failure, 2 usage error, 3 resource or
evaluation error.
"""
from __future__ import annotations

import argparse
import csv
import math
import statistics
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import problems
from .errors import (EvaluationError, OracleDomainError, ParameterError, ResourceError,
                     UnknownProblemError)
from .first_order import reverse_gradient
from .oracle import fd_gradient, fd_hessian, fd_tensor_vec, rel_err
from .second_order import edge_pushing, hessian_vector
from .tape import Tape, eval_forward
from .third_order import contract, rev_hedir, reverse_tensor_dense

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

DERIVATIVES = ("grad", "hess", "hessvec", "tensorvec", "tensor")
CSV_HEADER = ("problem", "n", "derivative", "nnz", "nnz_per_n", "time_ms", "repeats")
CROSS_TOL = 1e-12


@dataclass
class BenchRecord:
    problem: str
    n: int
    derivative: str
    nnz: int
    nnz_per_n: float
    time_ms: float
    repeats: int

    def row(self) -> list[str]:
        return [self.problem, str(self.n), self.derivative, str(self.nnz),
                f"{self.nnz_per_n:.6f}", f"{self.time_ms:.3f}", str(self.repeats)]


def _sweep(kind: str, tape: Tape, x, d) -> Callable[[], int]:
    """Forward evaluation plus one derivative sweep; returns the result's nonzero count."""
    if kind == "grad":
        return lambda: int(np.count_nonzero(reverse_gradient(tape, eval_forward(tape, x))))
    if kind == "hess":
        return lambda: edge_pushing(tape, eval_forward(tape, x)).W.nnz()
    if kind == "hessvec":
        return lambda: int(np.count_nonzero(hessian_vector(tape, eval_forward(tape, x), d)))
    if kind == "tensorvec":
        return lambda: rev_hedir(tape, eval_forward(tape, x), d).Td.nnz()
    return lambda: int(np.count_nonzero(reverse_tensor_dense(tape, eval_forward(tape, x)).array))


def _bench_point(name: str, tape: Tape, point: str):
    n = tape.n
    if point == "scaled":
        return problems.scaled_point(n)
    x, d = problems.index_point(n)
    try:
        eval_forward(tape, x)
    except EvaluationError as exc:
        print(f"note: {name} cannot be evaluated at x_i = i ({exc}); using x_i = i/n",
              file=sys.stderr)
        return problems.scaled_point(n)
    return x, d


def bench(name: str, n: int, band: int | None, derivatives, repeat: int,
          point: str = "paper") -> list[BenchRecord]:
    spec = problems.problem_spec(name, n, band if name == "heavey_band" else None)
    tape = problems.make_problem(spec)
    x, d = _bench_point(name, tape, point)
    out = []
    for kind in derivatives:
        run = _sweep(kind, tape, x, d)
        nnz = run()  # also compiles every kernel involved
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            run()
            times.append(time.perf_counter() - t0)
        ms = max(statistics.median(times) * 1e3, 1e-6)
        out.append(BenchRecord(name, n, kind, nnz, nnz / n, ms, repeat))
    return out


# -- check ------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.error <= self.tol


TOY_POINT = (1.0, 2.0, math.pi / 2)
TOY_DIRECTION = (1.0, 1.0, 1.0)
TOY_GRADIENT = np.array([2.0, 1.0, 0.0])
TOY_HESSIAN = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0]])
TOY_TENSOR_VEC = np.array([[0.0, 0.0, -2.0], [0.0, 0.0, -1.0], [-2.0, -1.0, -3.0]])


def check_point(tape: Tape, x, d, tol: float, dense_cap: int | None = None) -> list[CheckResult]:
    """Every sweep against its oracle at one point."""
    trace = eval_forward(tape, x)
    H = edge_pushing(tape, trace, debug=True)
    R = rev_hedir(tape, trace, d, debug=True)
    Hd = H.dense()
    Td = R.dense()
    res = [
        CheckResult("gradient vs finite differences",
                    rel_err(reverse_gradient(tape, trace), fd_gradient(tape, x)), tol),
        CheckResult("hessian vs finite differences", rel_err(Hd, fd_hessian(tape, x)), tol),
        CheckResult("hessian-vector vs W.d", rel_err(hessian_vector(tape, trace, d), Hd @ d),
                    CROSS_TOL),
        CheckResult("tensor-vector vs finite differences",
                    rel_err(Td, fd_tensor_vec(tape, x, d)), tol),
        CheckResult("hessian from both sweeps", rel_err(R.W.to_dense(), Hd), CROSS_TOL),
    ]
    try:
        T = reverse_tensor_dense(tape, trace, cap=dense_cap)
    except ResourceError:
        pass
    else:
        res.append(CheckResult("tensor-vector vs dense tensor", rel_err(Td, contract(T, d)),
                               CROSS_TOL))
    audit_h, audit_r = H.audit, R.audit
    violations = (audit_h.malformed_rows + audit_h.lemma_violations + audit_r.malformed_rows
                  + audit_r.lemma_violations + audit_r.containment_violations)
    res.append(CheckResult("sweep invariants (violations)", float(violations), 0.0))
    return res


def check(name: str, n: int, seed: int, tol: float, points: int = 3) -> list[CheckResult]:
    tape = problems.make_problem(name, n)
    results: dict[str, CheckResult] = {}
    for p in range(points):
        x, d = problems.random_point(n, seed + p)
        for r in check_point(tape, x, d, tol):
            prev = results.get(r.name)
            if prev is None or r.error > prev.error:
                results[r.name] = r
    out = list(results.values())
    if name == "toy_xysinz":
        trace = eval_forward(tape, TOY_POINT)
        out += [
            CheckResult("reference gradient (2,1,0)",
                        rel_err(reverse_gradient(tape, trace), TOY_GRADIENT), CROSS_TOL),
            CheckResult("reference hessian",
                        rel_err(edge_pushing(tape, trace).dense(), TOY_HESSIAN), CROSS_TOL),
            CheckResult("reference tensor-vector",
                        rel_err(rev_hedir(tape, trace, TOY_DIRECTION).dense(), TOY_TENSOR_VEC),
                        CROSS_TOL),
        ]
    return out


# -- argument handling ------------------------------------------------------------

def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _tolerance(s: str) -> float:
    v = float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"tolerance must lie in (0, 1), got {s}")
    return v


def _problem(s: str) -> str:
    if s != "all" and s not in problems.REGISTRY:
        raise argparse.ArgumentTypeError(
            f"unknown problem {s!r}; choose from all, {', '.join(problems.REGISTRY)}")
    return s


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hotad", description="Sparse higher-order derivative sweeps.")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="time derivative sweeps on test problems, CSV output")
    b.add_argument("--problem", action="append", required=True, type=_problem,
                   help="problem name, repeatable; 'all' for every scalable problem")
    b.add_argument("--n", type=_positive_int, required=True)
    b.add_argument("--band", type=_positive_int, default=None, help="heavey_band window")
    b.add_argument("--derivative", action="append", required=True, choices=DERIVATIVES)
    b.add_argument("--repeat", type=_positive_int, default=3)
    b.add_argument("--csv", metavar="PATH", default=None, help="write CSV here, not stdout")
    b.add_argument("--point", choices=("paper", "scaled"), default="paper",
                   help="x_i = i (falls back to i/n if not evaluable) or x_i = i/n")

    c = sub.add_parser("check", help="compare every sweep against the oracles")
    c.add_argument("--problem", required=True, type=_problem)
    c.add_argument("--n", type=_positive_int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=_tolerance, default=1e-5)
    return ap


def _run_bench(args) -> int:
    names = []
    for p in args.problem:
        names += problems.suite_names() if p == "all" else [p]
    records = []
    for name in dict.fromkeys(names):
        records += bench(name, args.n, args.band, args.derivative, args.repeat, args.point)
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.row())
    finally:
        if args.csv:
            out.close()
    return EXIT_OK


def _run_check(args) -> int:
    if args.problem == "all":
        names = problems.suite_names()
    else:
        names = [args.problem]
    failed = []
    for name in names:
        print(f"{name} n={args.n} seed={args.seed}")
        for r in check(name, args.n, args.seed, args.tol):
            print(f"  {'ok  ' if r.ok else 'FAIL'} {r.name}: {r.error:.3e} (tol {r.tol:g})")
            if not r.ok:
                failed.append(f"{name}: {r.name}")
    if failed:
        print("failed: " + "; ".join(failed))
        return EXIT_CHECK_FAILED
    print("all checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors (and --help) this way
        return int(exc.code or 0)
    try:
        if args.command == "bench":
            return _run_bench(args)
        return _run_check(args)
    except (UnknownProblemError, ParameterError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hotad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, EvaluationError, OracleDomainError, MemoryError) as exc:
        print(f"hotad: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
