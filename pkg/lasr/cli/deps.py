"""Shared command-line plumbing: flags, config files and model loading."""

import argparse
import logging
from pathlib import Path
from typing import Any, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from lasr.core.exceptions import ConfigurationError, DataError, DimensionMismatchError
from lasr.models.pairs import Vocabulary
from lasr.models.query import Query
from lasr.models.stage import Model
from lasr.schemas.config import InferenceConfig, TrainConfig
from lasr.services import dataset_service, model_service

logger = logging.getLogger(__name__)

SchemaT = TypeVar("SchemaT", bound=BaseModel)

# config-file keys whose flag name differs from the schema field
KEY_ALIASES = {"lr": "learning_rate", "format": "output_format"}


def _default(schema: type[BaseModel], field: str) -> str:
    return f"default: {schema.model_fields[field].default}"


def add_config_flag(parser: argparse.ArgumentParser) -> None:
    """``--config PATH``: key=value or YAML file below the flags in precedence."""
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="key=value file (or .yaml/.yml) with flag values; flags take precedence",
    )


def add_train_flags(parser: argparse.ArgumentParser) -> None:
    """Hyperparameter flags of TrainConfig; unset flags keep the file or schema value."""
    group = parser.add_argument_group("training")
    sup = argparse.SUPPRESS
    group.add_argument("--stages", type=int, default=sup, help=_default(TrainConfig, "stages"))
    group.add_argument("--dim", type=int, default=sup, help=_default(TrainConfig, "dim"))
    group.add_argument("--k", type=int, default=sup, help=_default(TrainConfig, "k"))
    group.add_argument("--loss", choices=["warp", "auc"], default=sup)
    group.add_argument(
        "--lr",
        dest="learning_rate",
        type=float,
        default=sup,
        help=_default(TrainConfig, "learning_rate"),
    )
    group.add_argument("--C", dest="C", type=float, default=sup, help=_default(TrainConfig, "C"))
    group.add_argument("--margin", type=float, default=sup, help=_default(TrainConfig, "margin"))
    group.add_argument("--seed", type=int, default=sup, help=_default(TrainConfig, "seed"))
    group.add_argument(
        "--eval-every", type=int, default=sup, help=_default(TrainConfig, "eval_every")
    )
    group.add_argument("--patience", type=int, default=sup, help=_default(TrainConfig, "patience"))
    group.add_argument(
        "--max-updates", type=int, default=sup, help=_default(TrainConfig, "max_updates")
    )
    group.add_argument("--weight-scheme", choices=["sparse", "dense"], default=sup)
    group.add_argument("--freeze-context", action="store_true", default=sup)
    group.add_argument("--warm-start", action="store_true", default=sup)
    group.add_argument(
        "--structure-init", type=float, default=sup, help=_default(TrainConfig, "structure_init")
    )
    group.add_argument("--workers", type=int, default=sup, help=_default(TrainConfig, "workers"))


def add_inference_flags(parser: argparse.ArgumentParser) -> None:
    """Flags of InferenceConfig."""
    group = parser.add_argument_group("inference")
    sup = argparse.SUPPRESS
    group.add_argument("--k", type=int, default=sup, help="list length (default: model k)")
    group.add_argument(
        "--strategy",
        choices=["unstructured", "greedy", "beam", "iterative"],
        default=sup,
        help=_default(InferenceConfig, "strategy"),
    )
    group.add_argument(
        "--beam-width", type=int, default=sup, help=_default(InferenceConfig, "beam_width")
    )
    group.add_argument(
        "--stages-to-run", type=int, default=sup, help="last cascade stage (default: all)"
    )


def read_config_file(path: Path | None) -> dict[str, Any]:
    """Read flag values from a config file.

    ``key=value`` lines with ``#`` comments, or a flat YAML mapping for
    ``.yaml``/``.yml`` files. Keys are long flag names, dashes or underscores.

    Raises:
        ConfigurationError: On malformed lines or a non-mapping YAML document.
    """
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")

    if path.suffix in (".yaml", ".yml"):
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict) or any(isinstance(v, (dict, list)) for v in data.values()):
            raise ConfigurationError(f"{path}: expected a flat mapping")
        raw = {str(k): v for k, v in data.items()}
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {line!r}")
            raw[key.strip()] = value.strip()

    values = {}
    for key, value in raw.items():
        name = key.lstrip("-").replace("-", "_")
        values[KEY_ALIASES.get(name, name)] = value
    return values


def build_schema(
    schema: type[SchemaT], args: argparse.Namespace, file_values: dict[str, Any], **overrides: Any
) -> SchemaT:
    """Merge schema defaults < config file < flags and validate.

    Args:
        schema: Pydantic schema to build.
        args: Parsed flags; only flags given on the command line are present.
        file_values: Values read by ``read_config_file``.
        **overrides: Values fixed by the command itself.

    Returns:
        The validated schema instance.

    Raises:
        ConfigurationError: Wrapping the pydantic validation message.
    """
    fields = schema.model_fields
    values = {k: v for k, v in file_values.items() if k in fields}
    values.update({k: v for k, v in vars(args).items() if k in fields})
    values.update(overrides)
    try:
        return schema(**values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid {schema.__name__}: {e}") from e


def warn_unknown_keys(file_values: dict[str, Any], *schemas: type[BaseModel]) -> None:
    """Log config-file keys that no schema of the command uses."""
    known = set().union(*(s.model_fields for s in schemas))
    for key in sorted(set(file_values) - known):
        logger.warning(f"Ignoring unknown config key: {key}")


def log_effective_config(command: str, *configs: BaseModel) -> None:
    """Echo the merged configuration as one key=value line."""
    values: dict[str, Any] = {}
    for config in configs:
        values.update(config.model_dump())
    line = " ".join(f"{k}={v}" for k, v in values.items())
    logger.info(f"command={command} {line}")


def sidecar_paths(model_path: str | Path) -> tuple[Path, Path]:
    """Query and item vocabulary files stored next to a model file."""
    model_path = Path(model_path)
    return (
        model_path.with_name(model_path.name + ".query_vocab.tsv"),
        model_path.with_name(model_path.name + ".item_vocab.tsv"),
    )


def load_query_features(
    path: Path | None, query_vocab: Vocabulary, n_query_features: int | None = None
) -> tuple[dict[int, Query] | None, int | None]:
    """Feature vectors keyed by query index, and the feature dimension.

    Args:
        path: Feature file or None for one-hot queries.
        query_vocab: Query vocabulary.
        n_query_features: Dimension fixed by a trained model, if any.

    Raises:
        DimensionMismatchError: If the file uses indices beyond the model dimension.
    """
    if path is None:
        return None, None
    features, dim = dataset_service.read_query_features(path)
    if n_query_features is not None:
        if dim > n_query_features:
            raise DimensionMismatchError(
                f"{path}: feature index {dim - 1} exceeds the model dimension {n_query_features}"
            )
        dim = n_query_features
    return dataset_service.index_query_features(features, query_vocab), dim


def load_model_bundle(model_path: Path) -> tuple[Model, Vocabulary, Vocabulary]:
    """Load a model with its vocabulary sidecars and check they agree.

    Raises:
        DimensionMismatchError: If the item vocabulary size differs from the model.
    """
    model = model_service.load_model(model_path)
    query_vocab_path, item_vocab_path = sidecar_paths(model_path)
    query_vocab = dataset_service.load_vocab(query_vocab_path)
    item_vocab = dataset_service.load_vocab(item_vocab_path)
    if len(item_vocab) != model.n_items:
        raise DimensionMismatchError(
            f"{item_vocab_path} lists {len(item_vocab)} items but {model_path} has {model.n_items}"
        )
    return model, query_vocab, item_vocab


def check_one_hot_dim(model: Model, query_vocab: Vocabulary, model_path: Path) -> None:
    """One-hot queries need a query vocabulary matching the model's query dimension."""
    if len(query_vocab) != model.n_query_features:
        raise DimensionMismatchError(
            f"query vocabulary has {len(query_vocab)} tokens but {model_path} expects "
            f"{model.n_query_features} query features; pass --query-features"
        )


def check_same_vocab(expected: Path, found: Path) -> None:
    """Raise naming both files when two vocabulary files differ."""
    if dataset_service.load_vocab(expected) != dataset_service.load_vocab(found):
        raise DataError(f"vocabulary mismatch between {expected} and {found}")
