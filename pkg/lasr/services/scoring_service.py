"""Scoring service.

All functions are pure over the stage parameters. Parameters may be stored in
32-bit floats; every score is accumulated in float64.
"""

from collections.abc import Sequence

import numpy as np

from lasr.core.exceptions import ContractViolation
from lasr.models.query import Query
from lasr.models.ranking import RankedList
from lasr.models.stage import StageParams
from lasr.models.weights import PositionWeights

ItemList = RankedList | Sequence[int] | np.ndarray


def _item_ids(items: ItemList) -> np.ndarray:
    if isinstance(items, RankedList):
        return np.asarray(items.items, dtype=np.int64)
    return np.asarray(items, dtype=np.int64).reshape(-1)


def _check_items(stage: StageParams, items: np.ndarray) -> None:
    if items.size and (items.min() < 0 or items.max() >= stage.n_items):
        raise IndexError(f"item id out of range for D_items={stage.n_items}")


def latent_query(stage: StageParams, q: Query) -> np.ndarray:
    """Map a sparse query to its n-dimensional latent vector ``U q``.

    Cost is O(nnz(q) * n).
    """
    q.check_dim(stage.n_query_features)
    return stage.U[:, q.indices].astype(np.float64) @ q.values


def score_query_item(stage: StageParams, q: Query, d: int) -> float:
    """Base score ``f(q, d) = (U q) . (V d)``.

    Args:
        stage: Stage parameters.
        q: Query.
        d: Item id.

    Returns:
        The score.

    Raises:
        IndexError: If the item id is out of range.
    """
    _check_items(stage, np.array([d]))
    u = latent_query(stage, q)
    return float(u @ stage.V[:, d].astype(np.float64))


def score_all_items(stage: StageParams, q: Query) -> np.ndarray:
    """Base scores of every item for one query, as a float64 vector."""
    return latent_query(stage, q) @ stage.V.astype(np.float64)


def context_vector(stage: StageParams, context: ItemList, weights: PositionWeights) -> np.ndarray:
    """Weighted sum ``sum_j w_j S d_j`` over a ranked list."""
    items = _item_ids(context)
    _check_items(stage, items)
    w = weights.head(items.size)
    return stage.S[:, items].astype(np.float64) @ w


def score_vanilla_list(
    stage: StageParams, q: Query, ranked: ItemList, weights: PositionWeights
) -> float:
    """Position-weighted sum of base scores over a list.

    Raises:
        ContractViolation: If the list is empty.
        IndexError: If an item id is out of range.
    """
    items = _item_ids(ranked)
    if items.size == 0:
        raise ContractViolation("cannot score an empty list")
    _check_items(stage, items)
    base = latent_query(stage, q) @ stage.V[:, items].astype(np.float64)
    return float(weights.head(items.size) @ base)


def structured_score(
    base: np.ndarray, S: np.ndarray, items: np.ndarray, weights: PositionWeights
) -> float:
    """Structured list score from precomputed base scores.

    The pairwise term, diagonal included, is evaluated as
    ``||sum_i w_i S d_i||^2``.

    Args:
        base: Base score of every item (float64).
        S: Structure matrix in float64.
        items: Item ids of the list.
        weights: Position weights.

    Returns:
        The structured score.
    """
    w = weights.head(items.size)
    pooled = S[:, items] @ w
    return float(w @ base[items] + pooled @ pooled)


def score_structured_list(
    stage: StageParams, q: Query, ranked: ItemList, weights: PositionWeights
) -> float:
    """Vanilla list score plus the item-item structure term.

    Raises:
        ContractViolation: If the list is empty.
        IndexError: If an item id is out of range.
    """
    items = _item_ids(ranked)
    if items.size == 0:
        raise ContractViolation("cannot score an empty list")
    _check_items(stage, items)
    w = weights.head(items.size)
    base = latent_query(stage, q) @ stage.V[:, items].astype(np.float64)
    pooled = stage.S[:, items].astype(np.float64) @ w
    return float(w @ base + pooled @ pooled)


def extension_gains(
    base: np.ndarray, S: np.ndarray, sq_norms: np.ndarray, prefix_context: np.ndarray, w_n: float
) -> np.ndarray:
    """Greedy extension value of every item at position N.

    ``w_N f(q, d) + w_N (c . S d) + w_N^2 ||S d||^2`` with ``c`` the weighted
    context of the fixed prefix.
    """
    return w_n * base + w_n * (prefix_context @ S) + (w_n * w_n) * sq_norms


def structured_increments(
    base: np.ndarray, S: np.ndarray, sq_norms: np.ndarray, prefix_context: np.ndarray, w_n: float
) -> np.ndarray:
    """Change of the structured list score when each item is appended at position N.

    ``||c + w_N S d||^2 - ||c||^2`` counts the cross term twice, so a prefix's
    running total is exactly its structured score.
    """
    return w_n * base + 2.0 * w_n * (prefix_context @ S) + (w_n * w_n) * sq_norms


def score_greedy_extension(
    stage: StageParams,
    q: Query,
    candidate: int,
    prefix: ItemList,
    position: int,
    weights: PositionWeights,
) -> float:
    """Value of appending ``candidate`` at ``position`` after a fixed prefix.

    Args:
        stage: Stage parameters.
        q: Query.
        candidate: Item to append.
        prefix: Items already placed at positions ``1..N-1``.
        position: 1-based position N; must equal ``len(prefix) + 1``.
        weights: Position weights.

    Returns:
        ``w_N f(q, c) + sum_{i<N} w_i w_N (S d_i).(S c) + w_N^2 ||S c||^2``.

    Raises:
        ContractViolation: If the candidate is already in the prefix or the
            position does not follow the prefix.
    """
    items = _item_ids(prefix)
    if position != items.size + 1:
        raise ContractViolation(
            f"position {position} does not follow a prefix of length {items.size}"
        )
    if candidate in set(items.tolist()):
        raise ContractViolation(f"candidate {candidate} is already in the prefix")
    _check_items(stage, np.append(items, candidate))

    w_n = weights.at(position)
    s_c = stage.S[:, candidate].astype(np.float64)
    cross = context_vector(stage, items, weights) @ s_c if items.size else 0.0
    return float(
        w_n * score_query_item(stage, q, candidate) + w_n * cross + (w_n * w_n) * (s_c @ s_c)
    )


def score_item_in_context(
    stage: StageParams, q: Query, d: int, context: ItemList, weights: PositionWeights
) -> float:
    """Score of one item conditioned on a frozen list from the previous stage.

    ``f(q, d) + sum_j w_j (S d).(S c_j)``; the item is scored against the whole
    context even when it appears in it.

    Raises:
        ContractViolation: If the context is empty.
    """
    items = _item_ids(context)
    if items.size == 0:
        raise ContractViolation("context is empty; score stage 0 with score_query_item")
    s_d = stage.S[:, d].astype(np.float64)
    return score_query_item(stage, q, d) + float(context_vector(stage, items, weights) @ s_d)


def score_all_in_context(
    stage: StageParams, q: Query, context: ItemList, weights: PositionWeights
) -> np.ndarray:
    """Context-conditioned scores of every item for one query."""
    items = _item_ids(context)
    if items.size == 0:
        raise ContractViolation("context is empty; score stage 0 with score_all_items")
    c = context_vector(stage, items, weights)
    return score_all_items(stage, q) + c @ stage.S.astype(np.float64)
