"""Command-line entry point: ``irs-gbsm {acf,ccf,ds-cdf,pathloss,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, experiments
from .config import ConfigError, ScenarioConfig, load, preset

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

RUNNERS = {
    "acf": experiments.run_acf,
    "ccf": experiments.run_ccf,
    "ds-cdf": experiments.run_ds_cdf,
    "pathloss": experiments.run_pathloss,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="scenario TOML file")
    src.add_argument("--preset", help="built-in scenario: fig5, fig6, fig7 or fig8")
    common.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--ensemble", type=int, help="ensemble size (overrides run.ensemble)")
    common.add_argument("--workers", type=int, help="worker processes, 0 = all cores")
    common.add_argument("--mode", choices=["corrected", "paper-literal"], help="cluster evolution rule")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="irs-gbsm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("acf", parents=[common], help="time autocorrelation, simulated and analytical")
    sub.add_parser("ccf", parents=[common], help="spatial cross-correlation across an array")
    sub.add_parser("ds-cdf", parents=[common], help="RMS delay-spread CDF")
    sub.add_parser("pathloss", parents=[common], help="cascaded IRS path loss sweeps")
    sub.add_parser("validate", parents=[common], help="check a scenario and print its hash")
    return parser


def resolve_config(args) -> ScenarioConfig:
    if args.config is not None:
        cfg = load(args.config)
    elif args.preset is not None:
        cfg = preset(args.preset)
    else:
        raise ConfigError("--config or --preset is required")
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.ensemble is not None:
        overrides["run.ensemble"] = args.ensemble
    if args.workers is not None:
        overrides["run.workers"] = args.workers
    if args.mode is not None:
        overrides["clusters.mode"] = args.mode
    return cfg.replace(**overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "ds-cdf" and cfg.run.ensemble < 100:
            raise ConfigError(f"run.ensemble: delay-spread CDF needs at least 100 realisations, got {cfg.run.ensemble}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{cfg.name}: ok (config hash {cfg.digest()})")
        return EXIT_OK
    try:
        paths = RUNNERS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
