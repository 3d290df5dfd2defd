"""Dataset service: event ingestion, pair extraction, vocabularies and splits."""

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from lasr.core.exceptions import ConfigurationError, DataError
from lasr.models.pairs import PairSet, Vocabulary
from lasr.models.query import Query
from lasr.schemas.config import SplitRule

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86_400
EVENT_COLUMNS = ["user", "timestamp", "item"]
PAIR_COLUMNS = ["query", "item"]

_EPOCH = re.compile(r"^-?\d+$")


def _read_fields(path: str | Path, n_fields: int) -> list[tuple[int, list[str]]]:
    """Split a UTF-8 TSV file into fields, keeping 1-based line numbers.

    Blank lines are skipped.

    Raises:
        DataError: On a wrong field count or an empty field.
    """
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != n_fields:
                raise DataError(
                    f"{path}:{lineno}: expected {n_fields} tab-separated fields, got {len(fields)}"
                )
            if any(not field for field in fields):
                raise DataError(f"{path}:{lineno}: empty field")
            rows.append((lineno, fields))
    return rows


def read_events(path: str | Path) -> pd.DataFrame:
    """Read an events file ``user<TAB>timestamp<TAB>item``.

    The timestamp format (integer epoch seconds or ISO-8601) is detected from the
    first event and applies to the whole file.

    Args:
        path: Events file.

    Returns:
        DataFrame with columns ``user``, ``timestamp`` (int64 UTC seconds) and
        ``item``, in file order.

    Raises:
        DataError: On malformed lines, unparsable timestamps or an empty file.
    """
    rows = _read_fields(path, 3)
    if not rows:
        raise DataError(f"{path}: no events")

    linenos = [lineno for lineno, _ in rows]
    users = [fields[0] for _, fields in rows]
    raw_ts = [fields[1] for _, fields in rows]
    items = [fields[2] for _, fields in rows]

    if _EPOCH.match(raw_ts[0]):
        timestamps = []
        for lineno, value in zip(linenos, raw_ts):
            if not _EPOCH.match(value):
                raise DataError(f"{path}:{lineno}: expected epoch seconds, got {value!r}")
            timestamps.append(int(value))
        ts = pd.Series(timestamps, dtype="int64")
        fmt = "epoch"
    else:
        parsed = pd.to_datetime(pd.Series(raw_ts), format="ISO8601", utc=True, errors="coerce")
        bad = parsed.isna().to_numpy()
        if bad.any():
            i = int(np.argmax(bad))
            raise DataError(f"{path}:{linenos[i]}: unparsable timestamp {raw_ts[i]!r}")
        ts = ((parsed - pd.Timestamp(0, tz="UTC")) // pd.Timedelta(seconds=1)).astype("int64")
        fmt = "ISO-8601"

    events = pd.DataFrame({"user": users, "timestamp": ts.to_numpy(), "item": items})
    logger.info(f"Read {len(events)} events from {path} ({fmt} timestamps)")
    return events


def sort_events(events: pd.DataFrame) -> pd.DataFrame:
    """Stable sort by (user, timestamp)."""
    return events.sort_values(["user", "timestamp"], kind="stable").reset_index(drop=True)


def extract_pairs(events: pd.DataFrame) -> pd.DataFrame:
    """Turn consecutive plays of the same user into (query, item) pairs.

    Args:
        events: Events grouped by user with non-decreasing timestamps per user.

    Returns:
        DataFrame with columns ``query`` (earlier item) and ``item`` (later item).

    Raises:
        DataError: If the events are not grouped by user and time-ordered.
    """
    if events.empty:
        return pd.DataFrame({"query": pd.Series(dtype=str), "item": pd.Series(dtype=str)})

    user = events["user"].reset_index(drop=True)
    ts = events["timestamp"].reset_index(drop=True)
    same_user = (user == user.shift()).to_numpy()

    backwards = same_user & (ts < ts.shift()).to_numpy()
    if backwards.any():
        row = int(np.argmax(backwards))
        raise DataError(f"events are not sorted by timestamp within user {user[row]!r} (row {row})")
    if int((~same_user).sum()) != user.nunique():
        raise DataError("events are not grouped by user; sort them by (user, timestamp) first")

    items = events["item"].to_numpy()
    idx = np.flatnonzero(same_user)
    return pd.DataFrame({"query": items[idx - 1], "item": items[idx]})


def split_by_day(events: pd.DataFrame, rule: SplitRule) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Route whole UTC calendar days to the train or test split.

    Days are numbered from the earliest day, counting empty days; day index i goes
    to test when ``i % modulus == modulus - 1``.

    Args:
        events: Events with epoch-second timestamps.
        rule: Split rule.

    Returns:
        (train events, test events), each keeping the input order.
    """
    if events.empty:
        return events.copy(), events.copy()
    day = events["timestamp"] // SECONDS_PER_DAY
    index = day - day.min()
    is_test = (index % rule.test_day_modulus == rule.test_day_modulus - 1).to_numpy()
    return (
        events.loc[~is_test].reset_index(drop=True),
        events.loc[is_test].reset_index(drop=True),
    )


def day_counts(events: pd.DataFrame, rule: SplitRule) -> tuple[int, int]:
    """(total calendar days spanned, days routed to test)."""
    if events.empty:
        return 0, 0
    day = events["timestamp"] // SECONDS_PER_DAY
    days = int(day.max() - day.min()) + 1
    return days, days // rule.test_day_modulus


def drop_self_pairs(pairs: pd.DataFrame) -> pd.DataFrame:
    """Remove (A, A) pairs."""
    return pairs.loc[pairs["query"] != pairs["item"]].reset_index(drop=True)


def build_vocab(pairs: pd.DataFrame) -> tuple[Vocabulary, Vocabulary]:
    """Query and item vocabularies in first-occurrence order.

    Raises:
        DataError: If there are no pairs.
    """
    if pairs.empty:
        raise DataError("cannot build vocabularies from zero pairs")
    return Vocabulary(pd.unique(pairs["query"])), Vocabulary(pd.unique(pairs["item"]))


def hold_out_validation(
    pairs: pd.DataFrame, size: int | float, seed: int = 0
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Uniform random train/validation split.

    Args:
        pairs: Training pairs.
        size: Validation pair count (int) or fraction in [0, 1) (float).
        seed: Seed of the permutation.

    Returns:
        (train, valid), disjoint, both in input order.

    Raises:
        ConfigurationError: If the requested size is negative or not below the
            number of pairs.
    """
    n = len(pairs)
    if isinstance(size, float):
        if not 0.0 <= size < 1.0:
            raise ConfigurationError(f"validation fraction must lie in [0, 1), got {size}")
        count = int(round(size * n))
    else:
        count = int(size)
    if count < 0:
        raise ConfigurationError(f"validation size must be >= 0, got {count}")
    if count > 0 and count >= n:
        raise ConfigurationError(f"validation size {count} is not below the {n} training pairs")

    perm = np.random.default_rng(seed).permutation(n)
    valid_idx = np.sort(perm[:count])
    train_idx = np.sort(perm[count:])
    return (
        pairs.iloc[train_idx].reset_index(drop=True),
        pairs.iloc[valid_idx].reset_index(drop=True),
    )


def encode_pairs(
    pairs: pd.DataFrame,
    query_vocab: Vocabulary,
    item_vocab: Vocabulary,
    query_features: dict[int, Query] | None = None,
    feature_dim: int | None = None,
) -> tuple[PairSet, int]:
    """Map token pairs to indices, dropping out-of-vocabulary pairs.

    Returns:
        The PairSet and the number of pairs skipped because the query or the item
        is unknown.
    """
    query_ids = pairs["query"].map(query_vocab.get)
    item_ids = pairs["item"].map(item_vocab.get)
    known = (query_ids.notna() & item_ids.notna()).to_numpy()
    skipped = int((~known).sum())
    if skipped:
        logger.info(f"Skipped {skipped} of {len(pairs)} pairs with out-of-vocabulary tokens")
    pair_set = PairSet(
        query_ids[known].to_numpy(dtype=np.int64),
        item_ids[known].to_numpy(dtype=np.int64),
        query_vocab,
        item_vocab,
        query_features,
        feature_dim,
    )
    return pair_set, skipped


def read_pairs(path: str | Path) -> pd.DataFrame:
    """Read a pairs file ``query_token<TAB>item_token``."""
    rows = _read_fields(path, 2)
    return pd.DataFrame([fields for _, fields in rows], columns=PAIR_COLUMNS, dtype=str)


def write_pairs(pairs: pd.DataFrame, path: str | Path) -> None:
    """Write pairs as ``query_token<TAB>item_token`` lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for query, item in pairs[PAIR_COLUMNS].itertuples(index=False):
            f.write(f"{query}\t{item}\n")


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """Write ``token<TAB>index`` lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for i, token in enumerate(vocab):
            f.write(f"{token}\t{i}\n")


def load_vocab(path: str | Path) -> Vocabulary:
    """Read a vocabulary written by ``save_vocab``.

    Raises:
        DataError: If the indices are not dense and in line order.
    """
    tokens = []
    for lineno, (token, index) in _read_fields(path, 2):
        if index != str(len(tokens)):
            raise DataError(f"{path}:{lineno}: expected index {len(tokens)}, got {index!r}")
        tokens.append(token)
    return Vocabulary(tokens)


def read_query_features(path: str | Path) -> tuple[dict[str, Query], int]:
    """Read sparse query vectors ``token<TAB>idx:val idx:val ...``.

    Returns:
        Feature vector per query token and the feature dimension (largest index
        plus one).

    Raises:
        DataError: On malformed entries, with the line number.
    """
    features: dict[str, Query] = {}
    dim = 0
    for lineno, (token, body) in _read_fields(path, 2):
        indices, values = [], []
        for entry in body.split():
            idx, sep, val = entry.partition(":")
            try:
                if not sep:
                    raise ValueError(entry)
                indices.append(int(idx))
                values.append(float(val))
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed feature entry {entry!r}") from None
        if not indices or min(indices) < 0:
            raise DataError(f"{path}:{lineno}: feature vector needs non-negative indices")
        if token in features:
            raise DataError(f"{path}:{lineno}: duplicate query token {token!r}")
        try:
            features[token] = Query(np.array(indices), np.array(values))
        except ValueError as e:
            raise DataError(f"{path}:{lineno}: {e}") from None
        dim = max(dim, max(indices) + 1)
    if not features:
        raise DataError(f"{path}: no feature vectors")
    return features, dim


def index_query_features(
    features: dict[str, Query], query_vocab: Vocabulary
) -> dict[int, Query]:
    """Re-key token feature vectors by query vocabulary index."""
    return {query_vocab.index(t): q for t, q in features.items() if t in query_vocab}


@dataclass
class IngestResult:
    """Splits and vocabularies produced from one events file."""

    train: pd.DataFrame
    valid: pd.DataFrame
    test: pd.DataFrame
    query_vocab: Vocabulary
    item_vocab: Vocabulary
    stats: dict[str, int]


def prepare_dataset(
    events: pd.DataFrame,
    rule: SplitRule,
    valid_size: int | float,
    seed: int = 0,
    self_pairs: bool = True,
) -> IngestResult:
    """Run the whole ingestion pipeline in memory.

    Events are sorted, split by day, turned into pairs per split, the training
    pairs are split into train and validation, and vocabularies are built from the
    training pairs before the hold-out.

    Args:
        events: Raw events.
        rule: Day split rule.
        valid_size: Validation count or fraction.
        seed: Seed of the hold-out.
        self_pairs: Keep (A, A) pairs in train and validation.

    Returns:
        IngestResult.

    Raises:
        DataError: If the events yield no training pair.
    """
    if events.empty:
        raise DataError("no events")
    train_events, test_events = split_by_day(events, rule)
    train_pairs = extract_pairs(sort_events(train_events))
    test_pairs = extract_pairs(sort_events(test_events))
    if not self_pairs:
        train_pairs = drop_self_pairs(train_pairs)
    if train_pairs.empty:
        raise DataError("the training days yield no pairs")

    query_vocab, item_vocab = build_vocab(train_pairs)
    train_pairs, valid_pairs = hold_out_validation(train_pairs, valid_size, seed)
    days, test_days = day_counts(events, rule)

    stats = {
        "events": len(events),
        "users": int(events["user"].nunique()),
        "train_events": len(train_events),
        "test_events": len(test_events),
        "train_pairs": len(train_pairs),
        "valid_pairs": len(valid_pairs),
        "test_pairs": len(test_pairs),
        "query_vocab": len(query_vocab),
        "item_vocab": len(item_vocab),
        "test_days": test_days,
        "days": days,
    }
    return IngestResult(train_pairs, valid_pairs, test_pairs, query_vocab, item_vocab, stats)


def write_dataset(result: IngestResult, out_dir: str | Path) -> None:
    """Write pair files, vocabularies and ``stats.txt`` into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_pairs(result.train, out / "train.tsv")
    write_pairs(result.valid, out / "valid.tsv")
    write_pairs(result.test, out / "test.tsv")
    save_vocab(result.query_vocab, out / "query_vocab.tsv")
    save_vocab(result.item_vocab, out / "item_vocab.tsv")
    with open(out / "stats.txt", "w", encoding="utf-8", newline="\n") as f:
        for key, value in result.stats.items():
            f.write(f"{key}={value}\n")
    logger.info(f"Dataset written to {out}: {result.stats}")
