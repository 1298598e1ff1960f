"""Command-line entry point.

Subcommands map one-to-one onto experiments (plus the early-stopping
calculator):

    optstab stability  [--config FILE] [overrides]   stability_scaling
    optstab risk       [--config FILE] [overrides]   risk_decomposition
    optstab lecam      [--config FILE] [overrides]   lecam_audit
    optstab lemmas     [--config FILE] [overrides]   lemma_audit
    optstab bounds     [--config FILE] [overrides]   bounds_table
    optstab earlystop  --n N --eta ETA [--lipschitz L] [--radius R]

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error,
3 audit completed but failed its acceptance checks (lemmas/lecam/bounds).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional

from ..bounds import early_stopping_T
from ..losses import ValidationError
from .config import build_config, load_config
from .experiments import run_experiment
from .reports import write_report

_SUBCOMMAND_EXPERIMENT = {
    "stability": "stability_scaling",
    "risk": "risk_decomposition",
    "lecam": "lecam_audit",
    "lemmas": "lemma_audit",
    "bounds": "bounds_table",
}

_AUDITED = {"lecam_audit", "lemma_audit", "bounds_table"}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "plot-script"), default="plot-script",
                   help="csv emits series files only; plot-script adds the plot script")
    p.add_argument("--methods", help="comma list: gd,sgd,nag,nag_sc,hb,sgld")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--eta0", type=float)
    p.add_argument("--schedule", choices=("fixed", "power"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--holdout", type=int)
    p.add_argument("--subsample", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--ref-budget", dest="ref_budget", type=int)
    p.add_argument("--source", choices=("synthetic", "file"))
    p.add_argument("--data-path", dest="data_path")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optstab",
                                     description="stability laboratory for "
                                                 "first-order optimizers")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMAND_EXPERIMENT:
        _add_common(sub.add_parser(name))
    es = sub.add_parser("earlystop", help="iteration budget balancing both errors")
    es.add_argument("--n", type=int, required=True)
    es.add_argument("--eta", type=float, required=True)
    es.add_argument("--lipschitz", type=float, default=1.0)
    es.add_argument("--radius", type=float, default=1.0)
    return parser


_OVERRIDE_KEYS = ("seed", "out", "n", "d", "T", "reps", "eta0", "schedule",
                  "alpha", "gamma", "tau", "kappa", "holdout", "subsample",
                  "n_test", "ref_budget", "source", "data_path")


def main(argv: Optional[list] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "earlystop":
            T = early_stopping_T(args.n, args.eta, args.lipschitz, args.radius)
            print(T)
            return 0
        overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS}
        overrides["experiment"] = _SUBCOMMAND_EXPERIMENT[args.command]
        if args.methods:
            overrides["methods"] = tuple(m.strip() for m in args.methods.split(","))
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = build_config({}, overrides)
        report = run_experiment(cfg)
        files = write_report(report, cfg.out, emit_plot=args.format == "plot-script")
        for path in files:
            print(path)
        if report.passed is not None:
            print(f"audit {'PASS' if report.passed else 'FAIL'}")
            if cfg.experiment in _AUDITED and not report.passed:
                return 3
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
