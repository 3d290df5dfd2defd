"""``ingest``: events file to pair, vocabulary and stats files."""

import argparse
import logging
from pathlib import Path

from lasr.cli import deps
from lasr.core.exceptions import EXIT_OK
from lasr.schemas.config import IngestConfig
from lasr.services import dataset_service

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    """Add the ``ingest`` subcommand."""
    parser = subparsers.add_parser(
        "ingest", help="split an events file into train/valid/test pairs and vocabularies"
    )
    parser.add_argument("events", type=Path, help="user<TAB>timestamp<TAB>item file")
    parser.add_argument("out_dir", type=Path, help="output directory")
    sup = argparse.SUPPRESS
    parser.add_argument("--test-day-modulus", type=int, default=sup, help="default: 5")
    parser.add_argument("--valid-fraction", type=float, default=sup, help="default: 0.1")
    parser.add_argument(
        "--valid-count", type=int, default=sup, help="validation pair count; overrides the fraction"
    )
    parser.add_argument("--seed", type=int, default=sup, help="default: 0")
    parser.add_argument("--drop-self-pairs", action="store_true", default=sup)
    deps.add_config_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """Validate everything in memory, then write the output directory."""
    file_values = deps.read_config_file(args.config)
    deps.warn_unknown_keys(file_values, IngestConfig)
    config = deps.build_schema(IngestConfig, args, file_values)
    deps.log_effective_config("ingest", config)

    events = dataset_service.read_events(args.events)
    result = dataset_service.prepare_dataset(
        events,
        config,
        config.valid_size,
        seed=config.seed,
        self_pairs=not config.drop_self_pairs,
    )
    dataset_service.write_dataset(result, args.out_dir)
    return EXIT_OK
