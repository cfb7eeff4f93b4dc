"""
Command-line front end.

    python shiftlab.py check data/example_subnormal.json
    python shiftlab.py theorem data/example_subnormal.json --mmax 3 --nmax 3
    python shiftlab.py sixpoint data/tensor_grid.json --K 10,10
    python shiftlab.py scan-example --audit 10 --out results/region.svg

Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 parse error, 4 theorem defect,
5 construction error.
"""
import argparse
import logging
import os
import sys
from typing import List, Optional, Tuple

from config import TOLERANCE_SETTINGS, THEOREM_SETTINGS, GRID_SETTINGS, SCAN_SETTINGS, OUTPUT_SETTINGS
from measures import NonIntegrable, GammaMismatch
from shifts import DegenerateTail, NotCompletable, Unbounded, PathMismatch
from shifts.shift_2d import six_point_test
from shifts.tc_class import is_subnormal, psi_phi
from evaluation import verify_theorem, scan_example, audit_region, render_region_svg
from utils import (
    InputError, ScanConfig, setup_logging, load_json, parse_five_tuple, parse_grid,
    format_measure, format_verdict
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2
EXIT_PARSE_ERROR = 3
EXIT_DEFECT = 4
EXIT_CONSTRUCTION_ERROR = 5

CONSTRUCTION_ERRORS = (NotCompletable, Unbounded, DegenerateTail, GammaMismatch, PathMismatch)


def _index_pair(text: str) -> Tuple[int, int]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K1,K2 got {text!r}")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) < 0:
        raise argparse.ArgumentTypeError(f"expected two non-negative integers, got {text!r}")
    return parts[0], parts[1]


def _float_triple(text: str) -> Tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected w0,w1,w2 got {text!r}")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three numbers, got {text!r}")
    return parts


def cmd_check(args) -> int:
    ft = parse_five_tuple(load_json(args.input))
    verdict = is_subnormal(ft, args.tol)
    try:
        psi, phi = psi_phi(ft)
        print(f"psi = {format_measure(psi)}")
        print(f"phi = {format_measure(phi)}")
    except NonIntegrable as e:
        print(f"psi/phi undefined: {e}")
    for name in ("psi", "phi"):
        if name in verdict.details:
            print(format_verdict(name, verdict.details[name]))
    print(format_verdict("subnormal", verdict))

    # a pass is final; only a failure within the boundary is inconclusive
    if not verdict.passed and verdict.margin > -TOLERANCE_SETTINGS["boundary"]:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def cmd_theorem(args) -> int:
    ft = parse_five_tuple(load_json(args.input))
    report = verify_theorem(ft, args.mmax, args.nmax, args.tol)
    print(format_verdict("T subnormal", report.base))
    if report.transpose is not None:
        print(format_verdict("transpose", report.transpose))
    print("power agreement (rows m, columns n):")
    print(report.agreement_matrix().to_string())
    for (m, n), entry in report.entries.items():
        if entry["status"] != "agree":
            print(f"  ({m},{n}): {entry['status']} - power subnormal={entry['passed']}, margin={entry['margin']}")

    status = report.status
    if status == "defect":
        return EXIT_DEFECT
    if status == "error":
        return EXIT_CONSTRUCTION_ERROR
    if status == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def cmd_sixpoint(args) -> int:
    K = args.K
    grid = parse_grid(load_json(args.input), window=(K[0] + 2, K[1] + 2))
    verdict = six_point_test(grid, K, args.tol)
    print(format_verdict(f"six-point test on {K}", verdict))
    if not verdict.passed:
        print(f"first failing index: {verdict.witness}")
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def cmd_scan_example(args) -> int:
    try:
        config = ScanConfig(kappa_steps=args.kappa_steps, y0_steps=args.y0_steps, omega=args.omega,
                            a=args.a, window=args.K, audit=args.audit, out=args.out)
    except ValueError as e:
        raise InputError(str(e)) from e

    scan = scan_example(config)
    if config.out is None:
        scan.to_csv(sys.stdout, index=False, float_format=OUTPUT_SETTINGS["csv_float_format"])
    else:
        directory = os.path.dirname(config.out)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        if config.output_format == "svg":
            render_region_svg(scan, config.y0_steps, config.out)
        else:
            scan.to_csv(config.out, index=False, float_format=OUTPUT_SETTINGS["csv_float_format"])
        print(f"wrote {config.out}")

    nonempty = int(scan["region_nonempty"].sum())
    print(f"region non-empty at {nonempty} of {len(scan)} kappa values")
    if nonempty == 0:
        return EXIT_FAIL

    if config.audit:
        audit = audit_region(config, scan)
        print(audit[["kappa", "y0", "six_point_pass", "subnormal_pass", "powers_fail", "counterexample"]]
              .to_string(index=False))
        counterexamples = int(audit["counterexample"].sum()) if len(audit) else 0
        print(f"audit: {len(audit)} points, {counterexamples} counterexamples")
        if counterexamples or len(audit) < config.audit:
            return EXIT_FAIL
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftlab",
                                     description="Subnormality checks for weighted shifts in class TC")
    parser.add_argument("--tol", type=float, default=None,
                        help="Positivity tolerance (default: SHIFTLAB_TOL or %g)" % TOLERANCE_SETTINGS["positivity"])
    parser.add_argument("--log-dir", default=OUTPUT_SETTINGS["log_dir"], help="Directory for log files")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    subparsers = parser.add_subparsers(dest="command", required=True)

    check = subparsers.add_parser("check", help="Decide subnormality of a five-tuple")
    check.add_argument("input", help="Five-tuple JSON file")
    check.set_defaults(handler=cmd_check)

    theorem = subparsers.add_parser("theorem", help="Compare subnormality of T and of its powers")
    theorem.add_argument("input", help="Five-tuple JSON file")
    theorem.add_argument("--mmax", type=int, default=THEOREM_SETTINGS["mmax"])
    theorem.add_argument("--nmax", type=int, default=THEOREM_SETTINGS["nmax"])
    theorem.set_defaults(handler=cmd_theorem)

    sixpoint = subparsers.add_parser("sixpoint", help="Six-point hyponormality test on a window")
    sixpoint.add_argument("input", help="Grid JSON file")
    sixpoint.add_argument("--K", type=_index_pair, default=GRID_SETTINGS["commute_window"],
                          help="Index bound K1,K2")
    sixpoint.set_defaults(handler=cmd_sixpoint)

    scan = subparsers.add_parser("scan-example", help="Region of hyponormal, non-subnormal shifts")
    scan.add_argument("--omega", type=_float_triple, default=SCAN_SETTINGS["omega"],
                      help="Squared initial weights w0,w1,w2 of tau_1")
    scan.add_argument("--a", type=float, default=SCAN_SETTINGS["a"])
    scan.add_argument("--kappa-steps", type=int, default=SCAN_SETTINGS["kappa_steps"])
    scan.add_argument("--y0-steps", type=int, default=SCAN_SETTINGS["y0_steps"])
    scan.add_argument("--K", type=_index_pair, default=GRID_SETTINGS["hyponormal_K"],
                      help="Six-point window used by the audit")
    scan.add_argument("--audit", type=int, default=0, help="Number of region points to audit")
    scan.add_argument("--out", default=None, help="Output path ending in .csv or .svg (default: CSV to stdout)")
    scan.set_defaults(handler=cmd_scan_example)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE_ERROR if e.code else EXIT_PASS

    setup_logging(args.log_dir, args.verbose)
    logging.info(f"Running {args.command} with arguments: {args}")
    try:
        return args.handler(args)
    except (InputError, NonIntegrable) as e:
        logging.error(f"Invalid input: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except CONSTRUCTION_ERRORS as e:
        logging.error(f"Construction failed: {str(e)}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONSTRUCTION_ERROR


if __name__ == "__main__":
    sys.exit(main())
