"""Inference service: ranked-list prediction strategies.

Ties are broken by ascending item id everywhere (lexicographically smallest
prefix for whole-list searches), so repeated calls are bit-identical.
"""

import heapq
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from lasr.core.config import settings
from lasr.core.exceptions import ConfigurationError, GuardError
from lasr.models.query import Query
from lasr.models.ranking import RankedList
from lasr.models.stage import Model, StageParams
from lasr.models.weights import PositionWeights
from lasr.schemas.config import InferenceConfig
from lasr.services import scoring_service
from lasr.services.model_service import position_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IterativeResult:
    """Output of iterative inference.

    Attributes:
        final: The list of the last iteration.
        lists: Lists of iterations 0..t, ``lists[-1] is final``.
        scores: Context-conditioned scores of every item on the last iteration.
    """

    final: RankedList
    lists: list[RankedList]
    scores: np.ndarray


def _check_k(k: int, n_items: int) -> None:
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if k > n_items:
        raise ConfigurationError(f"k={k} exceeds the item count {n_items}")


def top_k_from_scores(scores: np.ndarray, k: int) -> RankedList:
    """The k best items of a score vector via a bounded heap.

    Args:
        scores: Score of every item.
        k: Cutoff.

    Returns:
        Items in non-increasing score order, ties by ascending id.
    """
    best = heapq.nlargest(
        k, zip(scores.tolist(), range(scores.size)), key=lambda pair: (pair[0], -pair[1])
    )
    return RankedList(items=tuple(d for _, d in best), scores=tuple(s for s, _ in best))


def top_k_unstructured(stage: StageParams, q: Query, k: int) -> RankedList:
    """Top-k items by base score.

    Raises:
        ConfigurationError: If k is outside ``[1, D_items]``.
    """
    _check_k(k, stage.n_items)
    return top_k_from_scores(scoring_service.score_all_items(stage, q), k)


def _weights_or_default(weights: PositionWeights | None, k: int) -> PositionWeights:
    return weights if weights is not None else position_weights(k)


def infer_greedy(
    stage: StageParams, q: Query, k: int, weights: PositionWeights | None = None
) -> RankedList:
    """Fill positions 1..k one at a time, each maximizing the extension value.

    Args:
        stage: Stage parameters.
        q: Query.
        k: List length.
        weights: Position weights; sparse harmonic weights of cutoff k by default.

    Returns:
        The greedy list; scores are the extension values at each position.
    """
    _check_k(k, stage.n_items)
    w = _weights_or_default(weights, k)

    base = scoring_service.score_all_items(stage, q)
    S = stage.S.astype(np.float64)
    sq_norms = np.einsum("ij,ij->j", S, S)
    context = np.zeros(stage.n, dtype=np.float64)
    taken = np.zeros(stage.n_items, dtype=bool)

    items: list[int] = []
    gains: list[float] = []
    for position in range(1, k + 1):
        w_n = w.at(position)
        gain = scoring_service.extension_gains(base, S, sq_norms, context, w_n)
        gain[taken] = -np.inf
        d = int(np.argmax(gain))
        items.append(d)
        gains.append(float(gain[d]))
        taken[d] = True
        context = context + w_n * S[:, d]

    return RankedList(items=tuple(items), scores=tuple(gains))


@dataclass
class _BeamEntry:
    items: tuple[int, ...]
    total: float
    context: np.ndarray


def _beam_pass(
    base: np.ndarray,
    S: np.ndarray,
    sq_norms: np.ndarray,
    k: int,
    width: int,
    w: PositionWeights,
) -> list[tuple[int, ...]]:
    """Complete prefixes left in a beam of the given width.

    Prefixes are ranked by their partial structured score, ties by the smallest
    prefix.
    """
    beam = [_BeamEntry((), 0.0, np.zeros(S.shape[0], dtype=np.float64))]
    for position in range(1, k + 1):
        w_n = w.at(position)
        candidates: list[tuple[float, tuple[int, ...], _BeamEntry, int]] = []
        for entry in beam:
            increment = scoring_service.structured_increments(
                base, S, sq_norms, entry.context, w_n
            )
            if entry.items:
                increment[list(entry.items)] = -np.inf
            # no parent can place more than width children in the next beam
            best = heapq.nlargest(
                width,
                zip(increment.tolist(), range(increment.size)),
                key=lambda pair: (pair[0], -pair[1]),
            )
            for value, d in best:
                if value == -np.inf:
                    continue
                candidates.append((entry.total + value, entry.items + (d,), entry, d))

        candidates.sort(key=lambda c: (-c[0], c[1]))
        beam = [
            _BeamEntry(items=items, total=total, context=parent.context + w_n * S[:, d])
            for total, items, parent, d in candidates[:width]
        ]
    return [entry.items for entry in beam]


def _path_gains(
    base: np.ndarray,
    S: np.ndarray,
    sq_norms: np.ndarray,
    items: tuple[int, ...],
    w: PositionWeights,
) -> tuple[float, ...]:
    context = np.zeros(S.shape[0], dtype=np.float64)
    gains = []
    for position, d in enumerate(items, start=1):
        w_n = w.at(position)
        gains.append(float(scoring_service.extension_gains(base, S, sq_norms, context, w_n)[d]))
        context = context + w_n * S[:, d]
    return tuple(gains)


def infer_beam(
    stage: StageParams,
    q: Query,
    k: int,
    beam_width: int,
    weights: PositionWeights | None = None,
) -> RankedList:
    """Beam search over prefixes ranked by their partial structured score.

    Width 1 is the greedy path. For a width M > 1 the greedy list and the final
    beams of every width 2..M compete, and the complete list with the largest
    structured score wins (ties: smallest list). The candidate pool only grows
    with M, so the returned score never decreases as the beam widens; the price
    is ``O(M^2 k D)`` work instead of ``O(M k D)``.

    Args:
        stage: Stage parameters.
        q: Query.
        k: List length.
        beam_width: Beam size M >= 1.
        weights: Position weights; sparse harmonic weights of cutoff k by default.

    Returns:
        Best complete list found; scores are the greedy extension values along it.
    """
    _check_k(k, stage.n_items)
    if beam_width < 1:
        raise ConfigurationError(f"beam width must be >= 1, got {beam_width}")
    w = _weights_or_default(weights, k)

    greedy = infer_greedy(stage, q, k, w)
    if beam_width == 1:
        return greedy

    base = scoring_service.score_all_items(stage, q)
    S = stage.S.astype(np.float64)
    sq_norms = np.einsum("ij,ij->j", S, S)

    best_items = greedy.items
    best_score = scoring_service.structured_score(base, S, np.array(best_items), w)
    for width in range(2, beam_width + 1):
        for items in _beam_pass(base, S, sq_norms, k, width, w):
            score = scoring_service.structured_score(base, S, np.array(items), w)
            if score > best_score or (score == best_score and items < best_items):
                best_items, best_score = items, score

    if best_items == greedy.items:
        return greedy
    return RankedList(items=best_items, scores=_path_gains(base, S, sq_norms, best_items, w))


def infer_exhaustive(
    stage: StageParams, q: Query, k: int, weights: PositionWeights | None = None
) -> RankedList:
    """Exact argmax of the structured list score by full enumeration.

    Test oracle only.

    Args:
        stage: Stage parameters.
        q: Query.
        k: Prefix length.
        weights: Position weights; sparse harmonic weights of cutoff k by default.

    Returns:
        The best ordered k-prefix, ties by lexicographic item ids; scores are the
        base scores of its items.

    Raises:
        GuardError: If the number of ordered k-prefixes exceeds
            ``settings.MAX_EXHAUSTIVE_PREFIXES``.
    """
    _check_k(k, stage.n_items)
    count = math.perm(stage.n_items, k)
    if count > settings.MAX_EXHAUSTIVE_PREFIXES:
        raise GuardError(
            f"{count} ordered prefixes exceed the exhaustive limit "
            f"{settings.MAX_EXHAUSTIVE_PREFIXES}"
        )
    w = _weights_or_default(weights, k)

    base = scoring_service.score_all_items(stage, q)
    S = stage.S.astype(np.float64)
    best_items: tuple[int, ...] = ()
    best_score = -np.inf
    # permutations are generated in lexicographic order: keep the first maximum
    for prefix in itertools.permutations(range(stage.n_items), k):
        score = scoring_service.structured_score(base, S, np.array(prefix), w)
        if score > best_score:
            best_items, best_score = prefix, score

    return RankedList(items=best_items, scores=tuple(float(base[d]) for d in best_items))


def _resolve_stage_count(model: Model, stages_to_run: int | None) -> int:
    t_last = model.T if stages_to_run is None else stages_to_run
    if t_last > model.T:
        raise ConfigurationError(
            f"requested {t_last} iterations but the model has stages 0..{model.T}"
        )
    return t_last


def infer_iterative(model: Model, q: Query, config: InferenceConfig) -> IterativeResult:
    """Cascade inference.

    Iteration 0 ranks by stage-0 base scores; iteration t ranks every item by its
    stage-t score conditioned on the list of iteration t - 1 and keeps the top k.

    Args:
        model: Trained cascade.
        q: Query.
        config: Inference configuration (``k`` and ``stages_to_run`` are used).

    Returns:
        IterativeResult with the final list and every intermediate list.

    Raises:
        ConfigurationError: If more iterations are requested than stages exist,
            or k exceeds the item count.
    """
    t_last = _resolve_stage_count(model, config.stages_to_run)
    _check_k(config.k, model.n_items)
    weights = model.weights()

    scores = scoring_service.score_all_items(model.stages[0], q)
    lists = [top_k_from_scores(scores, config.k)]
    for t in range(1, t_last + 1):
        scores = scoring_service.score_all_in_context(model.stages[t], q, lists[-1], weights)
        lists.append(top_k_from_scores(scores, config.k))

    return IterativeResult(final=lists[-1], lists=lists, scores=scores)


def structured_stage(model: Model, config: InferenceConfig) -> StageParams:
    """Stage used by the non-cascade strategies: the last stage run.

    With ``stages_to_run=0`` this is stage 0, the unstructured model.
    """
    return model.stages[_resolve_stage_count(model, config.stages_to_run)]


def list_weights(model: Model, k: int) -> PositionWeights:
    """Weights for searching a list of length k under the model's scheme.

    The model's own weights when they cover k positions, otherwise the same
    harmonic scheme cut at k, so no searched position carries a zero weight.
    """
    weights = model.weights()
    if weights.nonzeros >= k:
        return weights
    return position_weights(k, model.weight_scheme, model.n_items)


def infer(model: Model, q: Query, config: InferenceConfig) -> RankedList:
    """Produce a ranked list with the configured strategy.

    Args:
        model: Trained cascade.
        q: Query.
        config: Inference configuration.

    Returns:
        The ranked list.
    """
    if config.strategy == "iterative":
        return infer_iterative(model, q, config).final

    stage = structured_stage(model, config)
    if config.strategy == "unstructured":
        return top_k_unstructured(stage, q, config.k)
    if config.strategy == "greedy":
        return infer_greedy(stage, q, config.k, list_weights(model, config.k))
    return infer_beam(stage, q, config.k, config.beam_width, list_weights(model, config.k))
