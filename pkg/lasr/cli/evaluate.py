"""``eval``: ranking metrics of a model on a pairs file."""

import argparse
import logging
from pathlib import Path

from lasr.cli import deps
from lasr.core.exceptions import EXIT_OK
from lasr.schemas.config import EvalConfig, InferenceConfig
from lasr.services import dataset_service, evaluation_service

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    """Add the ``eval`` subcommand."""
    parser = subparsers.add_parser("eval", help="evaluate a model on query<TAB>item pairs")
    parser.add_argument("model", type=Path, help="model file")
    parser.add_argument("pairs", type=Path, help="query<TAB>item pairs file")
    parser.add_argument(
        "--ks", default=argparse.SUPPRESS, help="comma-separated cutoffs (default: 5,10,30,50)"
    )
    parser.add_argument(
        "--format",
        dest="output_format",
        choices=["kv", "json"],
        default=argparse.SUPPRESS,
        help="report format (default: kv)",
    )
    parser.add_argument(
        "--vocab-dir",
        type=Path,
        default=None,
        help="ingested directory whose vocabularies must match the model's",
    )
    parser.add_argument("--query-features", type=Path, default=None)
    deps.add_inference_flags(parser)
    deps.add_config_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """Print the report of the evaluation module to stdout."""
    file_values = deps.read_config_file(args.config)
    deps.warn_unknown_keys(file_values, EvalConfig, InferenceConfig)
    eval_config = deps.build_schema(EvalConfig, args, file_values)

    model, query_vocab, item_vocab = deps.load_model_bundle(args.model)
    if "k" not in vars(args) and "k" not in file_values:
        inference = deps.build_schema(InferenceConfig, args, file_values, k=model.k)
    else:
        inference = deps.build_schema(InferenceConfig, args, file_values)
    deps.log_effective_config("eval", eval_config, inference)

    if args.vocab_dir is not None:
        query_sidecar, item_sidecar = deps.sidecar_paths(args.model)
        deps.check_same_vocab(query_sidecar, args.vocab_dir / "query_vocab.tsv")
        deps.check_same_vocab(item_sidecar, args.vocab_dir / "item_vocab.tsv")

    features, feature_dim = deps.load_query_features(
        args.query_features, query_vocab, model.n_query_features
    )
    frame = dataset_service.read_pairs(args.pairs)
    missing = 0
    if features is None:
        deps.check_one_hot_dim(model, query_vocab, args.model)
    else:
        # pairs whose query has no feature vector count as out of vocabulary
        has_vector = frame["query"].map(lambda t: query_vocab.get(t) in features)
        has_vector = has_vector.to_numpy(dtype=bool)
        missing = int((~has_vector).sum())
        frame = frame.loc[has_vector].reset_index(drop=True)

    test, skipped = dataset_service.encode_pairs(
        frame, query_vocab, item_vocab, features, feature_dim
    )

    report = evaluation_service.evaluate(
        model, test, eval_config.ks, inference, skipped_oov=skipped + missing
    )
    if eval_config.output_format == "json":
        print(report.to_json())
    else:
        print(report.to_kv_lines())
    return EXIT_OK
