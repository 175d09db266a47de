"""Command-line entry point."""

from __future__ import annotations

import argparse
import os
import sys

from . import bench, examples
from .errors import SosforgeError
from .parse import parse_poly
from .textio import format_poly


def _seed() -> int:
    return int(os.environ.get("SOSFORGE_SEED", "0"))


def _print_report(rep) -> None:
    for line in rep.lines():
        print(line)


def cmd_glb(args) -> int:
    solve = not args.export or args.solve
    rep, _, _ = examples.run_glb(args.degree, args.box, solve=solve, export=args.export, scaled=not args.unscaled)
    _print_report(rep)
    return 0


def cmd_robust(args) -> int:
    rep, _, _ = examples.run_robust(args.n, solve=not args.no_solve, export=args.export)
    _print_report(rep)
    return 0


def cmd_localstab(args) -> int:
    rep, _, _ = examples.run_localstab(args.n, solve=not args.no_solve, export=args.export)
    _print_report(rep)
    return 0


def cmd_bench(args) -> int:
    qs = [int(s) for s in args.q.split(",") if s.strip()]
    records = bench.run_bench(args.op, qs, args.reps, seed=_seed(), csv_path=args.csv, parallel=args.parallel)
    if args.csv is None:
        bench.write_csv(records, "/dev/stdout")
    else:
        for r in records:
            print(f"{r.op:5s} {r.representation:6s} q={r.q:<7d} {r.wall_time:.6f} s  nnz={r.peak_nnz}  rows={r.basis_rows}")
    return 0


def cmd_parse(args) -> int:
    print(format_poly(parse_poly(args.expr)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sosforge", description="Sparse SOS program parser, examples and benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("glb", help="greatest lower bound of a quartic on a box")
    g.add_argument("--degree", type=int, default=2, help="degree of the multiplier basis")
    g.add_argument("--box", type=float, default=12.0, help="box half-width")
    g.add_argument("--solve", action="store_true", help="solve even when exporting")
    g.add_argument("--export", metavar="PATH", help="write the SDP in SDPA sparse format")
    g.add_argument("--unscaled", action="store_true", help="keep the original variables instead of x/box")
    g.set_defaults(func=cmd_glb)

    for name, fn, help_ in (
        ("robust", cmd_robust, "robust stability of x' = A(p) x"),
        ("localstab", cmd_localstab, "local stability of a Van der Pol chain"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--n", type=int, default=1, help="problem size")
        p.add_argument("--export", metavar="PATH", help="write the SDP in SDPA sparse format")
        p.add_argument("--no-solve", action="store_true", help="only parse and assemble")
        p.set_defaults(func=fn)

    b = sub.add_parser("bench", help="dpvar versus pvar timing")
    b.add_argument("--op", choices=bench.OPS, required=True)
    b.add_argument("--q", required=True, help="comma-separated ascending decision variable counts")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--csv", metavar="PATH", help="CSV output (stdout if omitted)")
    b.add_argument("--parallel", action="store_true", help="run different q values in parallel")
    b.set_defaults(func=cmd_bench)

    pp = sub.add_parser("parse", help="echo the canonical form of a polynomial")
    pp.add_argument("expr")
    pp.set_defaults(func=cmd_parse)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SosforgeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
