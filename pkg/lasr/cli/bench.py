"""``bench-synthetic``: structured-benefit comparison on generated data."""

import argparse
import logging

from lasr.cli import deps
from lasr.core.exceptions import EXIT_OK
from lasr.schemas.config import BenchmarkConfig
from lasr.services import synthetic_service

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    """Add the ``bench-synthetic`` subcommand."""
    parser = subparsers.add_parser(
        "bench-synthetic", help="compare t=0, t=1 and AUC recall on synthetic clustered data"
    )
    sup = argparse.SUPPRESS
    parser.add_argument("--seeds", type=int, default=sup, help="number of seeds (default: 10)")
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--n-items", type=int, default=sup, help="default: 500")
    parser.add_argument("--n-clusters", type=int, default=sup, help="default: 10")
    parser.add_argument("--n-queries", type=int, default=sup, help="default: 100")
    parser.add_argument("--decoy-rate", type=float, default=sup, help="default: 0.3")
    parser.add_argument("--dim", type=int, default=sup, help="default: 16")
    parser.add_argument("--k", type=int, default=sup, help="default: 5")
    parser.add_argument("--lr", dest="learning_rate", type=float, default=sup)
    parser.add_argument("--C", dest="C", type=float, default=sup)
    parser.add_argument("--eval-every", type=int, default=sup)
    parser.add_argument("--patience", type=int, default=sup)
    parser.add_argument("--max-updates", type=int, default=sup)
    parser.add_argument("--structure-init", type=float, default=sup, help="default: 0.1")
    deps.add_config_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """Run the benchmark and print one line per seed plus the win counts."""
    file_values = deps.read_config_file(args.config)
    deps.warn_unknown_keys(file_values, BenchmarkConfig)
    config = deps.build_schema(BenchmarkConfig, args, file_values)
    deps.log_effective_config("bench-synthetic", config)

    report = synthetic_service.run_benchmark(config, first_seed=args.first_seed)
    print(report.to_kv_lines())
    return EXIT_OK
