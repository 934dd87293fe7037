"""Command line entry point for convergence runs."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import DEFAULT_LEVELS, FULL_SWEEP_LEVELS, LevelFailure, run_convergence
from .polynomials import n_monomials
from .problems import EXAMPLES, ManufacturedSolutionError

EXAMPLE_DIM = {1: 2, 2: 3}

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


def _levels(text):
    try:
        levels = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None
    if not levels:
        raise argparse.ArgumentTypeError("empty level list")
    return levels


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quadcurl",
                                 description="Convergence study for the quad-curl solver.")
    ap.add_argument("--dim", type=int, choices=(2, 3), required=True)
    ap.add_argument("--example", type=int, choices=sorted(EXAMPLES), required=True)
    ap.add_argument("--order", type=int, default=2, help="reconstruction order m (>= 2)")
    ap.add_argument("--eta", type=float, default=None, help="penalty (default 30 in 2D, 40 in 3D)")
    ap.add_argument("--patch-size", type=int, default=None, help="target #S")
    ap.add_argument("--levels", type=_levels, default=None,
                    help="comma separated subdivisions per side, e.g. 10,20,40")
    ap.add_argument("--full-sweep", action="store_true",
                    help="use the long mesh sequence (2D to n=80, 3D to n=16)")
    ap.add_argument("--out", type=Path, required=True, help="CSV report path")
    ap.add_argument("--dump-matrices", action="store_true",
                    help="write A, B, C, F and patch diagnostics next to the report")
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    def usage(msg):
        print(f"quadcurl: error: {msg}", file=sys.stderr)
        return EXIT_USAGE

    if EXAMPLE_DIM[args.example] != args.dim:
        return usage(f"example {args.example} is posed in {EXAMPLE_DIM[args.example]}D")
    if args.order < 2:
        return usage("--order must be at least 2")
    if args.eta is not None and not args.eta > 0:
        return usage("--eta must be positive")
    if args.patch_size is not None and args.patch_size < n_monomials(args.dim, args.order):
        return usage(f"--patch-size must be at least {n_monomials(args.dim, args.order)} "
                     f"(dim P_m) for order {args.order}")
    levels = args.levels or (FULL_SWEEP_LEVELS if args.full_sweep else DEFAULT_LEVELS)[args.dim]
    if any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        return usage("--levels must be positive and strictly increasing")

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    try:
        problem = EXAMPLES[args.example]()
    except ManufacturedSolutionError as exc:
        print(f"quadcurl: manufactured solution check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    dump = None
    if args.dump_matrices:
        dump = str(args.out.with_suffix(""))
    try:
        report = run_convergence(problem, args.order, levels, args.eta, args.patch_size, dump)
    except LevelFailure as exc:
        print(f"quadcurl: numerical failure at {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    report.write_csv(args.out)
    if not args.quiet:
        print(report.table())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
