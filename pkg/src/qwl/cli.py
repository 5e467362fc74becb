"""Command-line entry point: ``qwl {exact,wl,metropolis,compare,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from .experiment import (
    ConfigError, ExperimentConfig, parse_config, run_compare, run_exact,
    run_metropolis_experiment, run_wl_experiment,
)
from .hamiltonian import format_spectrum, solve
from .qpe import TIERS
from .thermo import QUANTITIES

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (section.key = value per line)")
    common.add_argument("--seed", type=int, help="base seed; run r uses seed + r")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tier", choices=TIERS, help="QPE simulation tier")
    common.add_argument("--runs", type=int, help="number of independent runs")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key, e.g. --set model.N=2 (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true", help="log per-run progress")

    p = argparse.ArgumentParser(prog="qwl", description=__doc__)
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.add_parser("exact", parents=[common], help="exact spectrum and thermodynamic curves")
    sub.add_parser("wl", parents=[common], help="quantum Wang-Landau runs")
    sub.add_parser("metropolis", parents=[common],
                   help="quantum Metropolis runs, budget-matched to a prior 'wl' run")
    sub.add_parser("compare", parents=[common],
                   help="exact, WL and Metropolis, with error curves, RMSE table and plots")
    sub.add_parser("validate", parents=[common], help="oracle-equivalence battery")
    return p


def _config(args) -> ExperimentConfig:
    """Config file, then ``--set`` pairs, then the dedicated flags; validated once."""
    text = ExperimentConfig().to_text()
    if args.config:
        try:
            with open(args.config) as fh:
                text += fh.read() + "\n"
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    pairs = list(args.set)
    for flag, key in (("seed", "run.base_seed"), ("out", "run.output_dir"),
                      ("tier", "qpe.tier"), ("runs", "run.runs")):
        if getattr(args, flag) is not None:
            pairs.append(f"{key} = {getattr(args, flag)}")
    return parse_config(text + "\n".join(pairs) + "\n", args.config or "<defaults>")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"qwl: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.command == "exact":
            run_exact(cfg)
            sys.stdout.write(format_spectrum(solve(cfg.spec, vectors=False), cfg.spec))
        elif args.command == "wl":
            res = run_wl_experiment(cfg)
            print(f"wl: {len(res.run_curves)} runs, {res.total_steps} steps, "
                  f"{res.bins.ell} bins -> {cfg.output_dir}")
            if res.failures:
                return EXIT_VALIDATION
        elif args.command == "metropolis":
            res = run_metropolis_experiment(cfg)
            print(f"metropolis: {res.steps_per_chain} steps per chain, "
                  f"{res.post_burn_in_steps} post-burn-in in total -> {cfg.output_dir}")
        elif args.command == "compare":
            res = run_compare(cfg)
            print(f"{'quantity':<10}{'WL RMSE':>14}{'Metropolis RMSE':>18}")
            for q in QUANTITIES:
                print(f"{q:<10}{res.rmse['wl'][q]:>14.5g}{res.rmse['metropolis'][q]:>18.5g}")
        elif args.command == "validate":
            from .validation import run_battery

            checks = run_battery()
            for c in checks:
                print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
            return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION
    except ConfigError as exc:
        print(f"qwl: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
