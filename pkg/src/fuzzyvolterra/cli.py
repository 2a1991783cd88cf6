"""Command line front end.

    fuzzyvolterra solve --problem P --out O [--levels K --steps N --tol T --max-iter I]
    fuzzyvolterra diagnose --family F --eps E --cap C [--delta D --ladder D1,D2,...]
    fuzzyvolterra eta --a A --q Q --R R --N N --M M
    fuzzyvolterra verify

Exit codes: 0 success, 1 oracle failure, 2 invalid input,
3 non-convergence, 4 a Picard image left the ball of radius R.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analysis, files, verification
from .quadrature import gamma_fn
from .solver import compute_eta, picard_solve

EXIT_OK = 0
EXIT_ORACLE = 1
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3
EXIT_OMEGA = 4

log = logging.getLogger("fuzzyvolterra")


def format_sig(x: float) -> str:
    """12 significant digits, always with a decimal point."""
    s = f"{x:.12g}"
    if not any(c in s for c in ".eni"):
        s += ".0"
    return s


def _report_path(out: Path, report: Optional[str]) -> Path:
    if report:
        return Path(report)
    return out.with_name(out.stem + ".report.json")


def cmd_solve(args: argparse.Namespace) -> int:
    overrides = {"K": args.levels, "n": args.steps, "tol": args.tol, "max_iter": args.max_iter}
    try:
        problem = files.load_problem(args.problem, overrides)
        report = picard_solve(problem)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out = Path(args.out)
    files.write_bands(out, report.solution)
    rows = files.check_bands(out)
    doc = report.to_dict()
    doc["problem"] = files.problem_to_dict(problem)
    doc["bands"] = {"path": str(out), "rows": rows}
    report_path = _report_path(out, args.report)
    report_path.write_text(json.dumps(doc, indent=2), encoding="utf-8")

    print(f"status      {report.status}")
    print(f"N           {format_sig(report.N)}")
    print(f"M           {format_sig(report.M)}  ({report.M_method})")
    print(f"eta         {format_sig(report.eta)}")
    print(f"iterations  {report.iterations}")
    print(f"residual    {report.final_residual:.3e}")
    for name, check in report.checks.items():
        print(f"check {name:<22s} {'pass' if check.passed else 'FAIL'}  worst={check.worst:.4g}")
    for note in report.warnings:
        print(f"note: {note}")
    print(f"bands       {out} ({rows} rows)")
    print(f"report      {report_path}")

    if not report.checks["self_map"].passed:
        return EXIT_OMEGA
    if not report.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def _parse_ladder(text: Optional[str]) -> Sequence[float]:
    if not text:
        return analysis.DELTA_LADDER
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_diagnose(args: argparse.Namespace) -> int:
    try:
        family = files.load_family(args.family)
        report = analysis.compactness_verdict(
            family, args.cap, args.eps, args.delta, _parse_ladder(args.ladder)
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    doc = json.dumps(report.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(doc, encoding="utf-8")
    print(doc)
    print(
        f"{report.label or args.family}: bound={report.bound:.6g} "
        f"omega({report.delta:g})={report.modulus_at_delta:.6g} verdict={report.verdict} ({report.note})",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_eta(args: argparse.Namespace) -> int:
    try:
        eta = compute_eta(args.a, args.q, args.R, args.N, args.M)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(format_sig(eta))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    gamma = None
    if args.perturb_gamma:
        eps = args.perturb_gamma
        gamma = lambda x: gamma_fn(x) * (1.0 + eps)  # noqa: E731
    results = verification.run_oracle_suite(gamma=gamma)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} oracle checks passed")
    return EXIT_ORACLE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzyvolterra", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file by Picard iteration")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True, help="band table (CSV)")
    p.add_argument("--report", help="report path (default: <out>.report.json)")
    p.add_argument("--levels", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("diagnose", help="compactness diagnostics for a family file")
    p.add_argument("--family", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--cap", type=float, required=True)
    p.add_argument("--delta", type=float, default=analysis.DELTA_LADDER[-1])
    p.add_argument("--ladder", help="comma-separated deltas for the modulus table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("eta", help="existence horizon eta")
    for name in ("a", "q", "R", "N", "M"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("verify", help="run the oracle suite")
    p.add_argument("--perturb-gamma", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
