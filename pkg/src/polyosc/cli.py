"""Command-line driver: trichotomy study, cell constant, checks, classifier."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .checks import run_checks
from .errors import ConfigurationError
from .experiments import DEFAULT_PROFILE, ExperimentConfig, run_cell_report, run_trichotomy
from .geometry import TrigPolynomial, classify_stability


def _parse_eps_list(text: str) -> tuple[float, ...]:
    return tuple(float(Fraction(part)) for part in text.split(","))


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyosc",
        description="Polyharmonic eigenvalue lab on oscillating-boundary domains")
    sub = parser.add_subparsers(dest="command", required=True)

    tri = sub.add_parser("trichotomy",
                         help="perturbed spectra vs the three candidate limits")
    tri.add_argument("--config", help="JSON config file (overridden by flags)")
    tri.add_argument("--m", type=int)
    tri.add_argument("--k", type=int)
    tri.add_argument("--alpha", type=_parse_floats, metavar="A1,A2,...")
    tri.add_argument("--eps-list", type=_parse_eps_list, metavar="1/4,1/8,...")
    tri.add_argument("--b", help=f'profile, e.g. "{DEFAULT_PROFILE}"')
    tri.add_argument("--degree", type=int)
    tri.add_argument("--elems", type=_parse_ints, metavar="NX,NY")
    tri.add_argument("--n-eigs", type=int)
    tri.add_argument("--per-period", type=int,
                     help="horizontal elements per oscillation period")
    tri.add_argument("--out")

    cellp = sub.add_parser("cell-k", help="strange constant of the strip problem")
    cellp.add_argument("--m", type=int, default=2)
    cellp.add_argument("--b", default="2+cos")
    cellp.add_argument("--out", default="reports")

    checks = sub.add_parser("checks", help="run verification suites")
    checks.add_argument("selectors", nargs="*", default=["all"],
                        help="suite names (default: all)")

    cls = sub.add_parser("classify", help="stability regime for (m, k, alpha)")
    cls.add_argument("--m", type=int)
    cls.add_argument("--k", type=int)
    cls.add_argument("--alpha", type=float)
    cls.add_argument("--table", action="store_true",
                     help="print the regime table for m = 2..5")
    return parser


def _trichotomy_config(args) -> ExperimentConfig:
    payload = {}
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            payload = json.load(handle)
    config = ExperimentConfig.from_json(payload)
    overrides = {}
    if args.m is not None:
        overrides["m"] = args.m
    if args.k is not None:
        overrides["k"] = args.k
    if args.alpha is not None:
        overrides["alphas"] = args.alpha
    if args.eps_list is not None:
        overrides["eps_list"] = args.eps_list
    if args.b is not None:
        overrides["b"] = TrigPolynomial.parse(args.b)
    if args.degree is not None:
        overrides["degree"] = args.degree
    if args.elems is not None:
        overrides["elements"] = args.elems
    if args.n_eigs is not None:
        overrides["n_eigs"] = args.n_eigs
    if args.per_period is not None:
        overrides["elements_per_period"] = args.per_period
    if args.out is not None:
        overrides["out"] = args.out
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)
    return config


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "trichotomy":
        try:
            config = _trichotomy_config(args)
            report = run_trichotomy(config)
        except ConfigurationError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return 2
        print(f"strange constant K = {report.K:.6g}")
        for alpha in config.alphas:
            gaps = report.first_eigen_gaps(alpha)
            if not gaps["eps"]:
                continue
            closest = min(("sibc", "critical", "dirichlet"),
                          key=lambda key: gaps[key][-1])
            print(f"alpha={alpha}: smallest-eps gaps "
                  f"S={gaps['sibc'][-1]:.4g} C={gaps['critical'][-1]:.4g} "
                  f"D={gaps['dirichlet'][-1]:.4g} -> closest to {closest}")
        for alpha, eps, msg in report.failures:
            print(f"row failed: alpha={alpha} eps={eps}: {msg}", file=sys.stderr)
        print(f"wrote {config.out}/trichotomy.csv and trichotomy.png")
        return 1 if report.failures else 0

    if args.command == "cell-k":
        try:
            b = TrigPolynomial.parse(args.b)
            summary = run_cell_report(args.m, b, out=args.out)
        except (ValueError, ConfigurationError) as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return 2
        print(f"m={args.m}  K = {summary['K']:.10g}")
        print(f"identity residuals: pairing {summary['pairing_residual']:.2e}, "
              f"trace {summary['trace_residual']:.2e}")
        print(f"truncated-strip oracle error {summary['oracle_rel_error']:.2e} "
              f"(depth sensitivity {summary['oracle_depth_sensitivity']:.2e})")
        print(f"wrote {args.out}/cell_constant.csv, .json, .png")
        return 0

    if args.command == "checks":
        failed = 0
        for selector in args.selectors:
            try:
                results = run_checks(selector)
            except KeyError as exc:
                print(exc.args[0], file=sys.stderr)
                return 2
            for res in results:
                print(res.line())
                failed += not res.passed
        print(f"{'all checks passed' if not failed else f'{failed} check(s) FAILED'}")
        return 1 if failed else 0

    if args.command == "classify":
        if args.table:
            for m in range(2, 6):
                for k in range(1, m):
                    thr = m - k + 0.5
                    cells = []
                    for alpha in (thr - 0.5, thr, thr + 0.5):
                        verdict = classify_stability(m, k, alpha)
                        cells.append(f"alpha={alpha:g}: {verdict.regime.value}")
                    print(f"m={m} k={k} threshold={thr:g}  " + "; ".join(cells))
            return 0
        if args.m is None or args.k is None or args.alpha is None:
            print("classify needs --m, --k and --alpha (or --table)",
                  file=sys.stderr)
            return 2
        try:
            verdict = classify_stability(args.m, args.k, args.alpha)
        except ValueError as exc:
            print(f"invalid arguments: {exc}", file=sys.stderr)
            return 2
        print(f"m={args.m} k={args.k} alpha={args.alpha}: {verdict.regime.value} "
              f"(threshold {verdict.threshold}; {verdict.details})")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
