"""
Servicetime Lab command line.

    python -m app.main <command> [--config PATH] [--out DIR] [--seed U64] [--format csv|svg]

CSV files are always written; --format svg adds line plots next to them.
Exit status: 0 on success, 2 on manifest/input validation errors, 1 when a
run fails.
"""
import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from app.commands import analytic, figures, gen_bler, simulate, sla, sweep
from app.core.config import settings
from app.core.log import configure_logging
from app.schemas.manifest import RunManifest
from app.schemas.simulation import MAX_SEED
from app.services.analytic import AnalyticError
from app.services.channel import ChannelError
from app.services.manifest import EXIT_RUN_FAILURE, EXIT_VALIDATION, ManifestError, load_manifest
from app.services.optimizer import OptimizerError
from app.services.reports import ReportError
from app.services.simulator import SimulationError

logger = logging.getLogger("servicetime")

COMMANDS: Dict[str, tuple[str, Callable[[RunManifest], int]]] = {
    analytic.NAME: (analytic.HELP, analytic.cmd_analytic),
    simulate.NAME: (simulate.HELP, simulate.cmd_simulate),
    sweep.NAME: (sweep.HELP, sweep.cmd_sweep),
    sla.NAME: (sla.HELP, sla.cmd_sla),
    gen_bler.NAME: (gen_bler.HELP, gen_bler.cmd_gen_bler),
    figures.NAME: (figures.HELP, figures.cmd_figures),
}

RUN_ERRORS = (AnalyticError, ChannelError, OptimizerError, ReportError, SimulationError)


def _seed(value: str) -> int:
    try:
        seed = int(value, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value}")
    if not 0 <= seed <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64 - 1], got {value}")
    return seed


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run manifest")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides env and manifest)")
    common.add_argument("--seed", type=_seed, metavar="U64", help="random seed (overrides manifest)")
    common.add_argument(
        "--format", action="append", choices=["csv", "svg"], dest="formats",
        help="report format; repeat for both",
    )
    common.add_argument("--log-level", default=None, help=f"logging level (default {settings.LOG_LEVEL})")

    parser = argparse.ArgumentParser(
        prog="servicetime", description=f"{settings.APP_NAME} {settings.APP_VERSION}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, _) in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging(settings, args.log_level.upper() if args.log_level else None)
    except ValueError as e:
        print(f"servicetime: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    _, handler = COMMANDS[args.command]
    try:
        manifest = load_manifest(args.config, out=args.out, seed=args.seed, formats=args.formats)
        status = handler(manifest)
    except ManifestError as e:
        logger.error("%s", e.message)
        return e.exit_code
    except ValidationError as e:
        logger.error("Invalid run parameters: %s", e)
        return EXIT_VALIDATION
    except RUN_ERRORS as e:
        logger.error("%s failed: %s", args.command, e.message)
        return EXIT_RUN_FAILURE

    logger.info("%s finished with status %d", args.command, status)
    return status


if __name__ == "__main__":
    sys.exit(main())
