"""``train``: fit a cascade on an ingested directory."""

import argparse
import logging
from pathlib import Path

from lasr.cli import deps
from lasr.core.exceptions import EXIT_OK
from lasr.core.logging import file_log
from lasr.schemas.config import TrainConfig
from lasr.services import dataset_service, evaluation_service, model_service, trainer_service

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    """Add the ``train`` subcommand."""
    parser = subparsers.add_parser("train", help="train a cascade and write the model file")
    parser.add_argument("pairs_dir", type=Path, help="directory written by ingest")
    parser.add_argument("model_out", type=Path, help="model file to write")
    parser.add_argument(
        "--query-features", type=Path, default=None, help="token<TAB>idx:val ... file"
    )
    parser.add_argument(
        "--log", type=Path, default=None, help="training log file (default: <model_out>.log)"
    )
    deps.add_train_flags(parser)
    deps.add_config_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """Train, then write the model and its vocabulary sidecars."""
    file_values = deps.read_config_file(args.config)
    deps.warn_unknown_keys(file_values, TrainConfig)
    config = deps.build_schema(TrainConfig, args, file_values)

    log_path = args.log or args.model_out.with_name(args.model_out.name + ".log")
    with file_log(log_path):
        deps.log_effective_config("train", config)

        query_vocab = dataset_service.load_vocab(args.pairs_dir / "query_vocab.tsv")
        item_vocab = dataset_service.load_vocab(args.pairs_dir / "item_vocab.tsv")
        features, feature_dim = deps.load_query_features(args.query_features, query_vocab)

        splits = {}
        for name in ("train", "valid"):
            frame = dataset_service.read_pairs(args.pairs_dir / f"{name}.tsv")
            splits[name], skipped = dataset_service.encode_pairs(
                frame, query_vocab, item_vocab, features, feature_dim
            )
            if skipped:
                logger.warning(f"{name}.tsv: {skipped} pairs outside the vocabularies")

        model = trainer_service.train(splits["train"], splits["valid"], config)

        margin_rank = evaluation_service.mean_margin_rank(
            model.stages[0], splits["valid"], config.margin
        )
        logger.info(f"stage=0 valid_mean_margin_rank={margin_rank:.4f}")

        model_service.save_model(model, args.model_out)
        query_vocab_path, item_vocab_path = deps.sidecar_paths(args.model_out)
        dataset_service.save_vocab(query_vocab, query_vocab_path)
        dataset_service.save_vocab(item_vocab, item_vocab_path)
    return EXIT_OK
