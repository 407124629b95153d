import argparse
import sys
from typing import List, Optional

from app.core.config import logger, settings
from app.core.exceptions import (
    EXIT_CONFIG_ERROR,
    EXIT_NUMERICAL_ERROR,
    EXIT_OK,
    ConfigError,
    NumericalInvariantError,
)
from app.integration.presets import DESCRIPTIONS
from app.integration.worker import run_config, run_preset


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def _workers(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("workers must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app.main",
        description=f"{settings.PROJECT_NAME} {settings.VERSION}: quantum Otto engine simulator.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a preset or an experiment config.")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="Preset id (see --list-presets).")
    source.add_argument("--config", help="Path to a TOML experiment config.")
    source.add_argument("--list-presets", action="store_true", help="List presets and exit.")
    run.add_argument("--profile", choices=("desk", "full"), default=None, help="Preset profile.")
    run.add_argument("--seed", type=_seed, default=None, help="Overrides params.master_seed.")
    run.add_argument("--out", default=None, help=f"Output directory (default: {settings.OUTPUT_DIR}).")
    run.add_argument(
        "--workers", type=_workers, default=None, help="Worker processes (default: $ZENO_OTTO_WORKERS)."
    )
    run.add_argument("--validate-only", action="store_true", help="Validate and resolve, do not run.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command-line entry point.

    Returns:
        int: 0 on success, 2 on configuration errors, 3 on numerical-invariant violations.
    """
    args = build_parser().parse_args(argv)

    if args.list_presets:
        for preset_id, description in DESCRIPTIONS.items():
            print(f"{preset_id:<16}{description}")
        return EXIT_OK

    try:
        if args.preset:
            run_preset(args.preset, args.profile, args.seed, args.out, args.workers, args.validate_only)
        else:
            if args.profile:
                logger.warning("--profile only applies to presets; use 'profile' in the config")
            run_config(args.config, args.seed, args.out, args.workers, args.validate_only)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except NumericalInvariantError as e:
        logger.error(f"Numerical invariant violated: {e}")
        return EXIT_NUMERICAL_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
