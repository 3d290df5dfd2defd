"""Vocabularies, training pairs and the per-query context cache."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from lasr.core.exceptions import DataError
from lasr.models.query import Query


class Vocabulary:
    """Injective token <-> dense index map.

    Attributes:
        tokens: Tokens in index order.
    """

    def __init__(self, tokens: Iterable[str]) -> None:
        self._tokens: list[str] = list(tokens)
        self._index: dict[str, int] = {}
        for i, token in enumerate(self._tokens):
            if token in self._index:
                raise DataError(f"duplicate vocabulary token: {token!r}")
            self._index[token] = i

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def get(self, token: str) -> int | None:
        """Index of a token, or None when it is out of vocabulary."""
        return self._index.get(token)

    def index(self, token: str) -> int:
        """Index of a token.

        Raises:
            DataError: If the token is unknown.
        """
        idx = self._index.get(token)
        if idx is None:
            raise DataError(f"unknown token: {token!r}")
        return idx

    def token(self, index: int) -> str:
        return self._tokens[index]

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self._tokens == other._tokens

    def __hash__(self) -> int:
        return hash(tuple(self._tokens))

    def __repr__(self) -> str:
        """String representation of Vocabulary."""
        return f"<Vocabulary(size={len(self)})>"


@dataclass(eq=False)
class PairSet:
    """Encoded (query, positive item) pairs.

    Attributes:
        query_ids: Query token index per pair.
        item_ids: Positive item index per pair.
        query_vocab: Query token vocabulary.
        item_vocab: Item token vocabulary.
        query_features: Optional sparse feature vector per query token index; when
            absent every query is the one-hot vector of its token index.
        feature_dim: Feature dimension D_q when ``query_features`` is given.
    """

    query_ids: np.ndarray
    item_ids: np.ndarray
    query_vocab: Vocabulary
    item_vocab: Vocabulary
    query_features: dict[int, Query] | None = None
    feature_dim: int | None = None
    _one_hot: dict[int, Query] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        self.query_ids = np.asarray(self.query_ids, dtype=np.int64).reshape(-1)
        self.item_ids = np.asarray(self.item_ids, dtype=np.int64).reshape(-1)
        if self.query_ids.shape != self.item_ids.shape:
            raise DataError("query and item columns differ in length")
        if self.query_ids.size:
            if self.query_ids.min() < 0 or self.query_ids.max() >= len(self.query_vocab):
                raise DataError("query index outside the query vocabulary")
            if self.item_ids.min() < 0 or self.item_ids.max() >= len(self.item_vocab):
                raise DataError("item index outside the item vocabulary")
        if self.query_features is not None:
            if self.feature_dim is None:
                raise DataError("query features need their dimension")
            missing = set(np.unique(self.query_ids).tolist()) - set(self.query_features)
            if missing:
                token = self.query_vocab.token(min(missing))
                raise DataError(f"no feature vector for query {token!r}")

    @property
    def n_query_features(self) -> int:
        """Query dimension D_q."""
        if self.query_features is not None and self.feature_dim is not None:
            return self.feature_dim
        return len(self.query_vocab)

    @property
    def n_items(self) -> int:
        return len(self.item_vocab)

    def query(self, i: int) -> Query:
        """Query vector of pair ``i``."""
        return self.query_for(int(self.query_ids[i]))

    def query_for(self, query_id: int) -> Query:
        """Query vector of a query token index."""
        if self.query_features is not None:
            return self.query_features[query_id]
        q = self._one_hot.get(query_id)
        if q is None:
            q = self._one_hot[query_id] = Query.one_hot(query_id)
        return q

    def unique_queries(self) -> np.ndarray:
        """Distinct query token indices in first-occurrence order."""
        _, first = np.unique(self.query_ids, return_index=True)
        return self.query_ids[np.sort(first)]

    def rows_by_query(self) -> dict[int, np.ndarray]:
        """Pair positions of every distinct query, grouped in one sort.

        Queries come in first-occurrence order, positions ascending.
        """
        order = np.argsort(self.query_ids, kind="stable")
        groups = np.split(order, np.flatnonzero(np.diff(self.query_ids[order])) + 1)
        by_id = {int(self.query_ids[rows[0]]): rows for rows in groups if rows.size}
        return {query_id: by_id[query_id] for query_id in self.unique_queries().tolist()}

    def subset(self, indices: Sequence[int] | np.ndarray) -> PairSet:
        """Pairs at the given positions, sharing vocabularies and features."""
        idx = np.asarray(indices, dtype=np.int64)
        return PairSet(
            self.query_ids[idx],
            self.item_ids[idx],
            self.query_vocab,
            self.item_vocab,
            self.query_features,
            self.feature_dim,
        )

    def __len__(self) -> int:
        return int(self.query_ids.size)

    def __repr__(self) -> str:
        """String representation of PairSet."""
        return (
            f"<PairSet(pairs={len(self)}, queries={len(self.query_vocab)}, "
            f"items={len(self.item_vocab)})>"
        )


@dataclass
class ContextCache:
    """Top-k lists of one cascade stage, keyed by query token index.

    Pairs sharing a query share its cached list.

    Attributes:
        stage: Stage t whose iterative-inference output is cached.
        lists: Item ids of the cached list per query token index.
    """

    stage: int
    lists: dict[int, np.ndarray] = field(default_factory=dict)

    def context_for(self, query_id: int) -> np.ndarray:
        """Cached list of a query.

        Raises:
            KeyError: If the query was not cached.
        """
        return self.lists[query_id]

    def __contains__(self, query_id: object) -> bool:
        return query_id in self.lists

    def __len__(self) -> int:
        return len(self.lists)
