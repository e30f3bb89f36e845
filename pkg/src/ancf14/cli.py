"""Command line entry point for the validation benchmarks.

``ancf14 run <name|config.json>`` executes one benchmark, prints a
pass/fail line per check and writes CSV series, PNG figures and a JSON
summary into the output directory.  Exit status: 0 all checks passed,
2 at least one check failed, 1 bad input or runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .benchmarks import BENCHMARK_NAMES, BenchmarkConfig, run_benchmark
from .errors import Ancf14Error
from .reporting import emit_results


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ancf14",
        description="Torsion-deformable beam benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser(
        "run", help="run a benchmark by name or from a JSON config")
    run.add_argument(
        "target",
        help="benchmark name (%s) or path to a JSON config file"
             % ", ".join(BENCHMARK_NAMES))
    run.add_argument("--elements", type=int, default=None,
                     help="number of beam elements")
    run.add_argument("--deformation", choices=("small", "large"),
                     default=None, help="strain measure variant")
    run.add_argument("--dt", type=float, default=None,
                     help="time step in seconds for dynamic runs")
    run.add_argument("--out", default=None,
                     help="output directory (default: ./out_<name>)")
    run.add_argument("--no-torsion", action="store_true",
                     help="lock every twist degree of freedom (ablation)")
    return parser


def _load_config(args) -> BenchmarkConfig:
    if args.target in BENCHMARK_NAMES:
        config = BenchmarkConfig(name=args.target)
    else:
        config = BenchmarkConfig.from_json(args.target)
    overrides = {}
    if args.elements is not None:
        overrides["n_elements"] = args.elements
    if args.deformation is not None:
        overrides["deformation"] = args.deformation
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.no_torsion:
        overrides["no_torsion"] = True
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        result = run_benchmark(config)
    except (Ancf14Error, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = config.output_dir or f"out_{config.name}"
    written = emit_results(result, out_dir)
    for check in result.checks:
        verdict = "PASS" if check.passed else "FAIL"
        print(f"{verdict} {check.name}: value={check.value:.6g} "
              f"({check.target})")
    for path in written:
        print(f"wrote {path}")
    return 0 if result.all_passed else 2


if __name__ == "__main__":
    sys.exit(main())
