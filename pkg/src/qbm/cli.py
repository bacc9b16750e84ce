"""Command-line entry point: ``qbm run | summarize | selftest``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .coeffs import BathSpec, CoeffKind, Regime, closed_form_coefficients, coeff_oracle
from .scenario import (
    ConfigParseError,
    ConfigValidationError,
    Figure,
    format_summary,
    parse_config,
    run_scenario,
    summarize,
    write_dataset,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _error_record(kind: str, exc: BaseException, **extra) -> str:
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    record.update(extra)
    return json.dumps(record, sort_keys=True)


def _cmd_run(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        print(_error_record("io", exc, path=args.config), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigParseError, ConfigValidationError) as exc:
        print(_error_record("config", exc, path=args.config), file=sys.stderr)
        return EXIT_USAGE

    out = args.out or cfg.output_path or f"{cfg.figure.value}.csv"
    try:
        rows = run_scenario(cfg, workers=args.workers)
        write_dataset(rows, cfg.figure, out)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        # write_dataset is atomic, so a failed run leaves no partial file behind
        print(_error_record("numeric", exc, figure=cfg.figure.value), file=sys.stderr)
        return EXIT_FAILED
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    try:
        with open(args.csv, encoding="ascii") as fh:
            summary = summarize(fh.read())
    except OSError as exc:
        print(_error_record("io", exc, path=args.csv), file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(_error_record("schema", exc, path=args.csv), file=sys.stderr)
        return EXIT_FAILED
    text = format_summary(summary)
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def selftest(verbose: bool = True) -> bool:
    """Closed-form coefficients against the quadrature oracle on a small grid."""
    ok = True
    for x in (0.15, 0.5, 5.0):
        for theta, regime in ((1000.0, Regime.HIGH_T), (10.0, Regime.LOW_T)):
            bath = BathSpec(x=x, theta_T=theta, regime=regime)
            taus = np.array([0.5, 2.0, 4.0])
            forms = closed_form_coefficients(taus, bath, stable=True)
            for kind, values in ((CoeffKind.GAMMA, forms.gamma), (CoeffKind.DELTA, forms.delta),
                                 (CoeffKind.PI, forms.pi)):
                for tau, value in zip(taus, values):
                    ref, _ = coeff_oracle(kind, float(tau), bath)
                    err = abs(value - ref)
                    good = err <= max(1e-10, 1e-6 * abs(ref))
                    ok &= good
                    if verbose:
                        status = "ok  " if good else "FAIL"
                        print(f"{status} {kind.value:5s} x={x:<5g} {regime.value:5s} tau={tau:<4g} "
                              f"closed={value: .12e} oracle={ref: .12e}")
    return ok


def _cmd_selftest(args) -> int:
    ok = selftest(verbose=not args.quiet)
    print("selftest passed" if ok else "selftest FAILED")
    return EXIT_OK if ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbm", description="QBM channel metrology datasets")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a scenario config and write its CSV dataset")
    run.add_argument("config", help="config file (key = value lines)")
    run.add_argument("--out", help="output CSV path (overrides output_path)")
    run.add_argument("--workers", type=int, help="worker processes (overrides config and QBM_WORKERS)")
    run.set_defaults(func=_cmd_run)

    summ = sub.add_parser("summarize", help="per-curve extrema, sign changes and gain windows")
    summ.add_argument("csv", help="dataset written by 'qbm run'")
    summ.add_argument("--out", help="write the summary here instead of stdout")
    summ.set_defaults(func=_cmd_summarize)

    st = sub.add_parser("selftest", help="check closed forms against the quadrature oracle")
    st.add_argument("--quiet", action="store_true")
    st.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print(_error_record("usage", ValueError("--workers must be >= 1")), file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
