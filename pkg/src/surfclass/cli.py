"""Command-line driver: sample, classify, table, tangent.

Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 pipeline-stage
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from .complex_builder import BuildParams, write_complex
from .geometry_io import CloudError, SurfaceKind, load_cloud, sample_surface, save_cloud
from .pipeline import DEFAULT_POINTS, MAX_DISCARD, StageError, classify_cloud, default_noise, run_trials
from .tangent_space import default_eps_grid, scaling_exponents

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_STAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; 2 is reserved for I/O here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _surface(name):
    try:
        return SurfaceKind.parse(name)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _params(args) -> BuildParams:
    try:
        return BuildParams(
            k=args.k, min_angle=args.min_angle, crossing_factor=args.crossing_factor, seed=args.seed
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_build_flags(p):
    p.add_argument("--k", type=int, default=20, help="neighbour count defining each vertex radius")
    p.add_argument("--min-angle", type=float, default=math.pi / 6, help="angle floor between edges (radians)")
    p.add_argument("--crossing-factor", type=float, default=10.0, help="crossing scan range in radii")
    p.add_argument("--seed", type=int, default=0)


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_sample(args) -> int:
    noise = default_noise(args.surface) if args.noise is None else args.noise
    if args.n < 1 or noise < 0:
        raise UsageError("--n must be >= 1 and --noise >= 0")
    cloud = sample_surface(args.surface, args.n, noise, args.seed)
    save_cloud(cloud, args.out)
    print(f"N={cloud.count} n={cloud.dim} seed={args.seed} noise={noise}")
    return EXIT_OK


def cmd_classify(args) -> int:
    params = _params(args)
    cloud = load_cloud(args.cloud)
    result = classify_cloud(cloud, params)
    report = result.report(params, {"input": str(args.cloud), "max_discard": MAX_DISCARD})
    if args.export:
        write_complex(result.graph, args.export)
    _dump_json(report, args.out)
    return EXIT_OK


def cmd_table(args) -> int:
    params = _params(args)
    if args.trials < 1 or args.jobs < 1:
        raise UsageError("--trials and --jobs must be >= 1")
    n_points = DEFAULT_POINTS[args.surface] if args.n is None else args.n
    noise = default_noise(args.surface) if args.noise is None else args.noise
    tally = run_trials(args.surface, args.trials, args.seed, n_points, noise, params, args.jobs)
    hist = " ".join(f"{k}:{v}" for k, v in sorted(tally.chi.items(), reverse=True))
    print(f"{'surface':<10}{'trials':>7}{'orient':>8}{'non-or':>8}{'failed':>8}  chi histogram")
    print(
        f"{tally.surface:<10}{tally.trials:>7}{tally.orientable:>8}"
        f"{tally.non_orientable:>8}{tally.failures:>8}  {hist}"
    )
    print(f"mean seconds per trial: {np.mean(tally.seconds):.2f}", file=sys.stderr)
    if args.out:
        out = tally.to_dict()
        out["params"] = {**asdict(params), "n_points": n_points, "noise_sd": noise, "base_seed": args.seed}
        del out["params"]["seed"]
        _dump_json(out, args.out)
    return EXIT_OK


def cmd_tangent(args) -> int:
    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    cloud = load_cloud(args.cloud)
    if not 0 <= args.index < cloud.count:
        raise UsageError(f"--index {args.index} outside cloud of {cloud.count} points")
    x = cloud.points[args.index]
    report = scaling_exponents(cloud, x, default_eps_grid(cloud, x, args.grid))
    n = cloud.dim
    header = ["eps"] + [f"sigma_{j}" for j in range(1, n + 1)] + [f"alpha_{j}" for j in range(1, n + 1)]
    fh = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in report.rows():
            writer.writerow([repr(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surfclass", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="write a noisy sample of a synthetic surface as CSV")
    p.add_argument("--surface", type=_surface, required=True, help=", ".join(k.value for k in SurfaceKind))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", type=float, default=None, help="noise sd (default 0.01 x surface radius)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("classify", help="classify the surface underlying a CSV cloud")
    p.add_argument("cloud")
    _add_build_flags(p)
    p.add_argument("--out", default=None, help="JSON report path (default stdout)")
    p.add_argument("--export", default=None, help="also write the complex as JSON")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("table", help="repeat sample+classify and tally the verdicts")
    p.add_argument("--surface", type=_surface, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n", type=int, default=None, help="points per cloud (default per surface)")
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="JSON tally path")
    _add_build_flags(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("tangent", help="singular values and scaling exponents at one point")
    p.add_argument("cloud")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--grid", type=int, default=32, help="number of eps values")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_tangent)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"surfclass: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, CloudError) as exc:
        print(f"surfclass: {exc}", file=sys.stderr)
        return EXIT_IO
    except StageError as exc:
        print(f"surfclass: stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
