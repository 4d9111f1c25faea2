"""Command-line entry point.

    weilfield <command> --config cfg.json [--out DIR] [--seed N] [--tol X]

Commands map one-to-one onto experiment kinds; --seed and --tol override
the config.  Exit codes: 0 all verdicts pass, 1 any verdict fails,
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import sys

from .. import dynamics as dyn
from .. import lattice as lt
from .config import ConfigError, ExperimentConfig
from .experiments import run
from .oracle import OracleError

_COMMANDS = {
    "solve": "run the Cauchy solver and report residuals",
    "conserve": "slice-by-slice conservation of the presymplectic form",
    "bracket": "brackets of configured observables (optionally vs the mode-sum oracle)",
    "jacobi": "Poisson axiom defects for an observable triple",
    "convergence": "error vs resolution ladder with a fitted order",
    "roundtrip": "Cauchy data round trip through solve and restrict",
    "oracle-pj": "tabulate the free-field mode-sum commutator function",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weilfield",
        description="numerical experiments for nilpotent-valued lattice field theory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="output directory for CSV/report")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--tol", type=float, default=None,
                       help="override the experiment's primary tolerance")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    experiment = args.command.replace("-", "_")
    try:
        config = ExperimentConfig.from_file(args.config)
        if config.experiment != experiment:
            raise ConfigError(
                f"config describes experiment {config.experiment!r}, "
                f"but the {args.command!r} command was invoked"
            )
        config = config.with_overrides(seed=args.seed, tol=args.tol)
        report = run(config, outdir=args.out)
    except (ConfigError, OracleError, dyn.SolverError, lt.LatticeError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in report.summary_lines():
        print(line)
    return 0 if report.all_passed() else 1


if __name__ == "__main__":
    sys.exit(main())
