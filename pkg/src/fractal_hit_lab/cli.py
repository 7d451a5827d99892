"""Command-line front end.

    fractal-hit-lab <subcommand> --config <path> [--seed N] [--trials N]
                    [--out DIR] [--workers N]

Experiment subcommands read a JSON manifest, stream one line per result row,
write results.jsonl / summary.csv / run_meta.json when --out is given, and
exit 0 only if every row assertion passed.  The `grid` subcommand is a
config-free debug tool printing exact cube geometry.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import FractalLabError
from .grid import CLOSED, HALF_OPEN, children, enlarge_beta, make_cube, min_distance, parent
from .manifest import _json_default, load_manifest, run_manifest

_EXPERIMENTS = [
    # (canonical subcommand, aliases, help)
    ("hitprob", [], "finite-window hitting probability vs its exact oracle"),
    ("corr", [], "correlated-pair counts f(n, eps) and growth exponent"),
    ("sn", ["hit-count-stats"], "hit count statistic with its second-moment bound"),
    ("hn", ["cover-count-stats"], "ball-cover count statistic and growth check"),
    ("boxdim", [], "box-dimension slope of covering counts"),
    ("lemma23", ["beta-coverage"], "coverage of [0,1] by enlarged chosen cubes"),
    ("prop14-count", ["cantor-counting"], "exact nested family counting recursion"),
]


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to the JSON manifest")
    sub.add_argument("--seed", type=int, default=None, help="master seed override")
    sub.add_argument("--trials", type=int, default=None, help="trial count override")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--workers", type=int, default=None, help="worker processes")


def _run_experiment(args: argparse.Namespace) -> int:
    man = load_manifest(
        args.config,
        seed=args.seed,
        trials=args.trials,
        out_dir=args.out,
        workers=args.workers,
    )
    record = run_manifest(man)
    for row in record.rows:
        print(json.dumps(row, sort_keys=True, default=_json_default))
    status = "ok" if record.all_passed else "FAILED ASSERTIONS"
    print(f"# {record.kind}: {len(record.rows)} rows, {status}", file=sys.stderr)
    return 0 if record.all_passed else 1


def _run_grid(args: argparse.Namespace) -> int:
    mode = HALF_OPEN if args.half_open else CLOSED
    cube = make_cube(args.level, args.coord, mode)
    print(f"cube: level={cube.level} coords={cube.coords} mode={cube.mode}")
    for axis in range(cube.dim):
        print(f"  extent[{axis}] = {cube.extent(axis)}")
    if cube.level > 0:
        print(f"  parent = {parent(cube).coords}")
    else:
        print("  parent = (none: root cube)")
    kids = ", ".join(str(c.coords) for c in children(cube))
    print(f"  children = {kids}")
    if args.other is not None:
        other = make_cube(args.level, args.other, mode)
        print(f"  distance to {other.coords} = {min_distance(cube, other)}")
    if args.beta is not None:
        print(f"  beta-enlargement ({args.beta}) = {enlarge_beta(cube, Fraction(args.beta))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fractal-hit-lab",
        description="limsup random fractal simulation and verification lab",
    )
    subs = ap.add_subparsers(dest="command", required=True)

    for name, aliases, help_text in _EXPERIMENTS:
        sub = subs.add_parser(name, aliases=aliases, help=help_text)
        _add_common(sub)
        sub.set_defaults(fn=_run_experiment)

    grid = subs.add_parser("grid", help="print exact geometry of a dyadic cube")
    grid.add_argument("--level", type=int, required=True)
    grid.add_argument(
        "--coord", type=int, nargs="+", required=True, help="cube coordinates"
    )
    grid.add_argument("--half-open", action="store_true", help="use the half-open cube")
    grid.add_argument(
        "--other", type=int, nargs="+", default=None, help="second cube for distance"
    )
    grid.add_argument("--beta", default=None, help="also print the beta-enlargement")
    grid.set_defaults(fn=_run_grid)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FractalLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
