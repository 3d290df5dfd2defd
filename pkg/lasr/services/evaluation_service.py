"""Evaluation service: rank of the positive item and ranking metrics."""

import logging
from collections.abc import Callable, Iterable

import numpy as np

from lasr.core.exceptions import ConfigurationError, DataError
from lasr.models.pairs import PairSet
from lasr.models.query import Query
from lasr.models.stage import Model, StageParams
from lasr.schemas.config import InferenceConfig
from lasr.schemas.report import EvalReport
from lasr.services import inference_service, loss_service, scoring_service

logger = logging.getLogger(__name__)

DEFAULT_KS = (5, 10, 30, 50)

Ranker = Callable[[int], int]


def rank_from_scores(scores: np.ndarray, positive: int) -> int:
    """1-based position of ``positive`` when sorting by score, ties by ascending id."""
    f_pos = scores[positive]
    greater = int(np.count_nonzero(scores > f_pos))
    tied_before = int(np.count_nonzero(scores[:positive] == f_pos))
    return 1 + greater + tied_before


def _ranker(model: Model, q: Query, config: InferenceConfig) -> Ranker:
    """Build the full-ranking position function of one query."""
    if config.strategy == "unstructured":
        stage = inference_service.structured_stage(model, config)
        scores = scoring_service.score_all_items(stage, q)
        return lambda d: rank_from_scores(scores, d)
    if config.strategy == "iterative":
        scores = inference_service.infer_iterative(model, q, config).scores
        return lambda d: rank_from_scores(scores, d)

    # greedy / beam: the list first, then the rest by context-conditioned score
    stage = inference_service.structured_stage(model, config)
    ranked = inference_service.infer(model, q, config)
    head = {d: i + 1 for i, d in enumerate(ranked.items)}
    tail_scores = scoring_service.score_all_in_context(
        stage, q, ranked, inference_service.list_weights(model, config.k)
    )
    in_head = np.zeros(model.n_items, dtype=bool)
    in_head[list(ranked.items)] = True

    def rank(d: int) -> int:
        if d in head:
            return head[d]
        f_d = tail_scores[d]
        greater = np.count_nonzero((tail_scores > f_d) & ~in_head)
        tied_before = np.count_nonzero((tail_scores[:d] == f_d) & ~in_head[:d])
        return len(head) + 1 + int(greater) + int(tied_before)

    return rank


def rank_of_positive(
    model: Model, q: Query, d_pos: int | None, config: InferenceConfig
) -> int | None:
    """Position of the positive item in the full ranking of one strategy.

    Unstructured and iterative strategies rank every item by their final scores.
    Greedy and beam place their list first and order the remaining items by their
    scores conditioned on that list.

    Args:
        model: Trained cascade.
        q: Query.
        d_pos: Positive item id, or None when it is out of vocabulary.
        config: Inference configuration.

    Returns:
        1-based rank, or None for an out-of-vocabulary positive.
    """
    if d_pos is None or not 0 <= d_pos < model.n_items:
        return None
    return _ranker(model, q, config)(d_pos)


def evaluate(
    model: Model,
    test: PairSet,
    ks: Iterable[int] = DEFAULT_KS,
    config: InferenceConfig | None = None,
    skipped_oov: int = 0,
) -> EvalReport:
    """Average ranking metrics over test pairs.

    Each distinct query is ranked once and shared by its pairs.

    Args:
        model: Trained cascade.
        test: Encoded test pairs (out-of-vocabulary pairs already removed).
        ks: Recall/precision cutoffs.
        config: Inference configuration; iterative with the model's k by default.
        skipped_oov: Number of test pairs removed for out-of-vocabulary tokens.

    Returns:
        EvalReport.

    Raises:
        DataError: If no pair is left to evaluate.
        ConfigurationError: If a cutoff is below 1.
    """
    cutoffs = sorted(set(ks))
    if not cutoffs or cutoffs[0] < 1:
        raise ConfigurationError(f"recall cutoffs must be >= 1, got {cutoffs}")
    if len(test) == 0:
        if skipped_oov:
            raise DataError(f"all {skipped_oov} test pairs are out of vocabulary")
        raise DataError("the test set is empty")
    if test.n_items != model.n_items:
        raise DataError(f"test items ({test.n_items}) differ from model items ({model.n_items})")
    if config is None:
        config = InferenceConfig(k=model.k)

    ranks = np.empty(len(test), dtype=np.int64)
    for query_id, rows in test.rows_by_query().items():
        rank = _ranker(model, test.query_for(query_id), config)
        for row in rows.tolist():
            ranks[row] = rank(int(test.item_ids[row]))

    recall = {k: float(np.mean(ranks <= k)) for k in cutoffs}
    report = EvalReport(
        recall_at=recall,
        precision_at={k: recall[k] / k for k in cutoffs},
        map_score=float(np.mean(1.0 / ranks)),
        mean_rank=float(np.mean(ranks)),
        pairs_evaluated=len(test),
        pairs_skipped_oov=skipped_oov,
    )
    logger.info(
        f"Evaluated {len(test)} pairs with strategy={config.strategy}: "
        f"map={report.map_score:.6f} mean_rank={report.mean_rank:.2f}"
    )
    return report


def mean_margin_rank(stage: StageParams, pairs: PairSet, margin: float = 1.0) -> float:
    """Average exact number of margin violators per pair at a stage, ignoring context.

    Diagnostic of what the sampled estimator approximates during training.
    """
    if len(pairs) == 0:
        raise DataError("no pairs to measure")
    total = 0
    for query_id, rows in pairs.rows_by_query().items():
        scores = scoring_service.score_all_items(stage, pairs.query_for(query_id))
        for d in pairs.item_ids[rows].tolist():
            total += loss_service.exact_margin_rank(scores, d, margin)
    return total / len(pairs)
