"""``predict``: top-k items for one query token or a file of tokens."""

import argparse
import logging
from pathlib import Path

from lasr.cli import deps
from lasr.core.exceptions import EXIT_OK, DataError
from lasr.models.pairs import Vocabulary
from lasr.models.query import Query
from lasr.schemas.config import InferenceConfig
from lasr.services import inference_service

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    """Add the ``predict`` subcommand."""
    parser = subparsers.add_parser("predict", help="print rank<TAB>item<TAB>score lines")
    parser.add_argument("model", type=Path, help="model file")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--query", help="query token")
    source.add_argument("--queries", type=Path, help="file with one query token per line")
    parser.add_argument("--query-features", type=Path, default=None)
    deps.add_inference_flags(parser)
    deps.add_config_flag(parser)
    parser.set_defaults(handler=run)


def _read_tokens(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _resolve(token: str, query_vocab: Vocabulary, features: dict[int, Query] | None) -> Query:
    index = query_vocab.get(token)
    if index is None:
        raise DataError(f"unknown query token: {token!r}")
    if features is None:
        return Query.one_hot(index)
    if index not in features:
        raise DataError(f"no feature vector for query token: {token!r}")
    return features[index]


def run(args: argparse.Namespace) -> int:
    """Resolve every query before printing anything."""
    file_values = deps.read_config_file(args.config)
    deps.warn_unknown_keys(file_values, InferenceConfig)

    model, query_vocab, item_vocab = deps.load_model_bundle(args.model)
    if "k" not in vars(args) and "k" not in file_values:
        config = deps.build_schema(InferenceConfig, args, file_values, k=model.k)
    else:
        config = deps.build_schema(InferenceConfig, args, file_values)
    deps.log_effective_config("predict", config)

    features, _ = deps.load_query_features(args.query_features, query_vocab, model.n_query_features)
    if features is None:
        deps.check_one_hot_dim(model, query_vocab, args.model)

    tokens = [args.query] if args.query is not None else _read_tokens(args.queries)
    queries = [(token, _resolve(token, query_vocab, features)) for token in tokens]

    lines = []
    for token, q in queries:
        if args.queries is not None:
            lines.append(f"# {token}")
        ranked = inference_service.infer(model, q, config)
        for rank, (d, score) in enumerate(zip(ranked.items, ranked.scores), start=1):
            lines.append(f"{rank}\t{item_vocab.token(d)}\t{score:.6f}")
    print("\n".join(lines))
    return EXIT_OK
