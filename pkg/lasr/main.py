"""Command-line entry point."""

import argparse
import logging
import sys

from lasr import __version__
from lasr.cli import register_commands
from lasr.core.config import settings
from lasr.core.exceptions import EXIT_DATA, EXIT_USAGE, LasrError
from lasr.core.logging import configure_logging

logger = logging.getLogger(__name__)


class LasrArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the usage exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        """Print usage and exit with code 1."""
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> LasrArgumentParser:
    """Assemble the top-level parser with every subcommand."""
    parser = LasrArgumentParser(
        prog="lasr", description="Latent structured ranking: ingest, train, evaluate, predict."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=settings.LOG_LEVEL,
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    register_commands(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one command.

    Args:
        argv: Arguments without the program name; ``sys.argv[1:]`` when None.

    Returns:
        Process exit code: 0 success, 1 usage, 2 data, 3 numerical failure.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.handler(args)
    except LasrError as e:
        logger.error(f"error: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"error: {e}")
        return EXIT_DATA
