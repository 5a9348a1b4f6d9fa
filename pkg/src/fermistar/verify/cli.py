"""Command line: ``fermistar verify`` and ``fermistar eval``.

Exit status is 0 when every check passes, 1 when a check fails and 2 for
configuration, input or output errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import SUITES, ConfigError, SuiteConfig
from .evaluate import EvalError, evaluate_document
from .report import Report
from .suites import run_suite

__all__ = ["run", "main", "build_parser"]

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def run(config: SuiteConfig, *, jobs: int = 1) -> Report:
    """Run the selected suites; records keep the suite order whatever ``jobs`` is."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda s: run_suite(s, config), config.suites))
    else:
        parts = [run_suite(s, config) for s in config.suites]
    return Report(config.to_json(), [r for part in parts for r in part])


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fermistar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run identity suites")
    v.add_argument("target", nargs="*", default=[], help=f"suites to run: all or any of {', '.join(SUITES)}")
    v.add_argument("--suite", action="append", default=[], help="add a suite (repeatable)")
    v.add_argument("--m", type=int, default=4, help="number of generators (even, at most 16)")
    v.add_argument("--hbar", type=float, default=1.0)
    v.add_argument("--seed", type=_seed, default=0, help="seed for the PCG64 generator")
    v.add_argument("--tol", type=float, default=1e-10, help="tolerance for numeric checks")
    v.add_argument("--samples", type=int, default=10, help="random instances per check")
    v.add_argument("--jobs", type=int, default=1, help="suites to run in parallel")
    v.add_argument("--json", dest="output", metavar="PATH", help="write the report as JSON")
    v.add_argument("--quiet", action="store_true", help="only print the summary line")

    e = sub.add_parser("eval", help="evaluate operations described in a JSON file")
    e.add_argument("file", help="request file, or - for standard input")
    e.add_argument("--compact", action="store_true", help="print on one line")
    return parser


def _verify(args) -> int:
    suites = list(args.target) + list(args.suite)
    try:
        config = SuiteConfig(m=args.m, hbar=args.hbar, seed=args.seed, tol=args.tol,
                             suites=tuple(suites) or ("all",), output=args.output, samples=args.samples)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report = run(config, jobs=max(1, args.jobs))
    lines = report.summary_lines()
    print("\n".join(lines[-1:] if args.quiet else lines))
    if config.output:
        try:
            with open(config.output, "w", encoding="utf-8") as fh:
                fh.write(report.dumps())
                fh.write("\n")
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_ERROR
    return EXIT_PASS if report.passed else EXIT_FAIL


def _eval(args) -> int:
    try:
        if args.file == "-":
            doc = json.load(sys.stdin)
        else:
            with open(args.file, encoding="utf-8") as fh:
                doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except json.JSONDecodeError as exc:
        print(f"error: {args.file}:{exc.lineno}:{exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_ERROR
    try:
        result = evaluate_document(doc)
    except EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(result, indent=None if args.compact else 2, sort_keys=True))
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        return _verify(args)
    return _eval(args)


if __name__ == "__main__":
    sys.exit(main())
