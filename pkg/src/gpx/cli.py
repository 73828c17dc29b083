"""Command line entry point ``gpx``.

Exit codes: 0 success, 1 verification failure, 2 input error,
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from .estimator import SeriesExpander
from .frontend.problem import ProblemError
from .residual import ResidualError, write_checks_csv

log = logging.getLogger("gpx")

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _param(text: str) -> tuple:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name.strip(), Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpx", description="Generalized power-series expansions of parametric ODEs.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("expand", help="expand every solution family")
    ex.add_argument("file")
    ex.add_argument("--order", type=int, default=None, help="number of series terms M")
    ex.add_argument("--limit", choices=("zero", "infinity"), default=None)
    ex.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE")
    ex.add_argument("--format", choices=("json", "text"), default="json")

    br = sub.add_parser("branch", help="critical parameter values only")
    br.add_argument("file")
    br.add_argument("--order", type=int, default=None)
    br.add_argument("--format", choices=("json", "text"), default="json")

    ve = sub.add_parser("verify", help="numeric residual check of each family")
    ve.add_argument("file")
    ve.add_argument("--family", default=None, metavar="ID")
    ve.add_argument("--tol", type=float, default=0.1)
    ve.add_argument("--csv", default=None, metavar="OUT")
    ve.add_argument("--order", type=int, default=None)
    ve.add_argument("--points", type=int, default=3, help="parameter points per family")
    ve.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE")
    ve.add_argument("--format", choices=("json", "text"), default="text")
    return ap


def _fit(args) -> SeriesExpander:
    if args.order is not None and args.order < 1:
        raise InputError("--order must be a positive integer")
    est = SeriesExpander(order=args.order, limit=getattr(args, "limit", None), params=dict(getattr(args, "param", [])) or None)
    try:
        return est.fit(args.file)
    except (OSError, ProblemError) as exc:
        raise InputError(str(exc)) from exc


def cmd_expand(args) -> int:
    report = _fit(args).report()
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text())
    return EXIT_OK


def cmd_branch(args) -> int:
    est = _fit(args)
    crits = [c.as_dict() for c in est.critical_values_]
    if args.format == "json":
        sys.stdout.write(json.dumps({"critical_values": crits}, indent=2, sort_keys=True) + "\n")
    else:
        for c in crits:
            sys.stdout.write(f"{c['kind']}: {c['equation']}  [{c['witness']}]\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.tol <= 0:
        raise InputError("--tol must be positive")
    est = _fit(args)
    est.set_params(tol=args.tol)
    if args.family is not None:
        try:
            est.family(args.family)
        except KeyError:
            raise InputError(f"no family {args.family!r}") from None
    try:
        checks = est.verify(args.family, points=args.points)
    except ResidualError as exc:
        raise InputError(str(exc)) from exc
    flat = [c for cs in checks.values() for c in cs]
    if args.csv:
        write_checks_csv(flat, args.csv)
    if args.format == "json":
        sys.stdout.write(est.report(checks).to_json())
    else:
        for c in flat:
            pt = ", ".join(f"{k}={v}" for k, v in sorted(c.point.items()))
            what = "exact solution" if c.exact else f"slope {c.slope:.4f} vs {c.predicted:.4f}"
            sys.stdout.write(f"{'PASS' if c.passed else 'FAIL'} {c.family} [{pt}] {what}\n")
    missing = [f.id for f in est.families_ if f.status != "excluded" and f.id in checks and not checks[f.id]]
    for fid in missing:
        sys.stdout.write(f"SKIP {fid} no parameter point found inside the region\n")
    return EXIT_OK if all(c.passed for c in flat) else EXIT_VERIFY


COMMANDS = {"expand": cmd_expand, "branch": cmd_branch, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the input-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"gpx: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - anything else is a bug in the engine
        log.debug("internal error", exc_info=True)
        print(f"gpx: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
