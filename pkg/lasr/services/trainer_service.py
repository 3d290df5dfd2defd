"""Trainer service: per-stage SGD with sampled WARP/AUC steps and validation stopping."""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from lasr.core.exceptions import ConfigurationError, ContractViolation, DataError, NumericalError
from lasr.models.pairs import ContextCache, PairSet
from lasr.models.query import Query
from lasr.models.stage import Model, StageParams
from lasr.models.weights import PositionWeights
from lasr.schemas.config import InferenceConfig, TrainConfig
from lasr.services import inference_service, loss_service, scoring_service
from lasr.services.model_service import init_model, project_columns_inplace

logger = logging.getLogger(__name__)

# (stage, updates, valid recall) -> False to stop training early
ProgressCallback = Callable[[int, int, float], bool]


def sgd_step(
    stage: StageParams,
    q: Query,
    d_pos: int,
    d_neg: int,
    multiplier: float,
    lr: float,
    C: float,
    context: np.ndarray | None = None,
    weights: PositionWeights | None = None,
    freeze_context: bool = False,
) -> None:
    """One projected gradient step on ``multiplier * max(0, margin - f(q,d+) + f(q,d-))``.

    The multiplier is a constant of the step. All deltas are computed from the
    parameters before the update, then applied and the touched columns are
    projected onto the norm-C ball.

    Args:
        stage: Stage parameters, updated in place.
        q: Query.
        d_pos: Positive item.
        d_neg: Violating negative item.
        multiplier: Loss weight of the sampled pair.
        lr: Learning rate.
        C: Maximum column norm.
        context: Frozen top-k list of the previous stage, or None at stage 0.
        weights: Position weights of the context; required with a context.
        freeze_context: Skip the gradient through the context columns of S.
    """
    g = lr * multiplier
    if g == 0.0:
        return

    u = scoring_service.latent_query(stage, q)
    v_pos = stage.V[:, d_pos].astype(np.float64)
    v_neg = stage.V[:, d_neg].astype(np.float64)

    U_cols = stage.U[:, q.indices].astype(np.float64)
    stage.U[:, q.indices] = U_cols + g * np.outer(v_pos - v_neg, q.values)
    stage.V[:, d_pos] = v_pos + g * u
    stage.V[:, d_neg] = v_neg - g * u
    project_columns_inplace(stage.U, C, q.indices)
    project_columns_inplace(stage.V, C, [d_pos, d_neg])

    if context is None or len(context) == 0:
        return
    if weights is None:
        raise ContractViolation("a context needs its position weights")

    ctx = np.asarray(context, dtype=np.int64)
    w = weights.head(ctx.size)
    s_pos = stage.S[:, d_pos].astype(np.float64)
    s_neg = stage.S[:, d_neg].astype(np.float64)
    c = stage.S[:, ctx].astype(np.float64) @ w

    # deltas per S column, summed where a context item is d+ or d-
    deltas: dict[int, np.ndarray] = {d_pos: g * c, d_neg: -g * c}
    if not freeze_context:
        diff = s_pos - s_neg
        for item, w_j in zip(ctx.tolist(), w.tolist()):
            if w_j == 0.0:
                continue
            if item in deltas:
                deltas[item] = deltas[item] + g * w_j * diff
            else:
                deltas[item] = g * w_j * diff

    for item, delta in deltas.items():
        stage.S[:, item] = stage.S[:, item].astype(np.float64) + delta
    project_columns_inplace(stage.S, C, list(deltas))


def _check_step_inputs(train: PairSet, valid: PairSet) -> None:
    if len(train) == 0:
        raise ConfigurationError("the training set is empty")
    if len(valid) == 0:
        raise ConfigurationError("the validation set is empty")
    if train.n_items < 2:
        raise ConfigurationError("training needs at least 2 items")


def _run_updates(
    stage: StageParams,
    train: PairSet,
    cache: ContextCache | None,
    weights: PositionWeights,
    config: TrainConfig,
    rng: np.random.Generator,
    count: int,
) -> int:
    """Draw ``count`` training pairs and apply their steps; returns the steps taken."""
    steps = 0
    n_items = train.n_items
    for _ in range(count):
        i = int(rng.integers(len(train)))
        query_id = int(train.query_ids[i])
        d_pos = int(train.item_ids[i])
        q = train.query_for(query_id)
        context = cache.context_for(query_id) if cache is not None else None

        u = scoring_service.latent_query(stage, q)
        c = None
        if context is not None:
            c = stage.S[:, context].astype(np.float64) @ weights.head(len(context))

        def scorer(items: np.ndarray) -> np.ndarray:
            scores = u @ stage.V[:, items].astype(np.float64)
            if c is not None:
                scores += c @ stage.S[:, items].astype(np.float64)
            return scores

        f_pos = float(scorer(np.array([d_pos]))[0])
        sample = loss_service.sample_negative(
            config.loss, scorer, f_pos, d_pos, n_items, config.margin, rng
        )
        multiplier = loss_service.step_multiplier(sample, n_items, config.loss)
        if multiplier > 0.0 and sample.negative is not None:
            sgd_step(
                stage,
                q,
                d_pos,
                sample.negative,
                multiplier,
                config.learning_rate,
                config.C,
                context=context,
                weights=weights,
                freeze_context=config.freeze_context,
            )
            steps += 1
    return steps


def _run_hogwild(
    stage: StageParams,
    train: PairSet,
    cache: ContextCache | None,
    weights: PositionWeights,
    config: TrainConfig,
    t: int,
    period: int,
    count: int,
) -> int:
    """Split ``count`` updates over a thread pool writing to the shared stage.

    Workers apply unsynchronised sparse updates; results are not reproducible.
    """
    base, extra = divmod(count, config.workers)
    shares = [base + (1 if w < extra else 0) for w in range(config.workers)]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [
            pool.submit(
                _run_updates,
                stage,
                train,
                cache,
                weights,
                config,
                np.random.default_rng([config.seed, t, period, w]),
                share,
            )
            for w, share in enumerate(shares)
            if share > 0
        ]
        return sum(f.result() for f in futures)


def validation_recall(
    stage: StageParams,
    valid: PairSet,
    k: int,
    weights: PositionWeights,
    valid_cache: ContextCache | None = None,
) -> float:
    """Recall@k of a stage on validation pairs.

    Each distinct query is ranked once: by base scores at stage 0, or by
    context-conditioned scores against its cached previous-stage list.
    """
    hits = 0
    for query_id, rows in valid.rows_by_query().items():
        q = valid.query_for(query_id)
        if valid_cache is None:
            scores = scoring_service.score_all_items(stage, q)
        else:
            scores = scoring_service.score_all_in_context(
                stage, q, valid_cache.context_for(query_id), weights
            )
        top = set(inference_service.top_k_from_scores(scores, k).items)
        positives = valid.item_ids[rows]
        hits += sum(1 for d in positives.tolist() if d in top)
    return hits / len(valid)


def _log_progress(t: int, updates: int, k: int, recall: float) -> None:
    logger.info(f"stage={t} updates={updates} valid_recall@{k}={recall:.6f}")


def train_stage(
    model: Model,
    train: PairSet,
    valid: PairSet,
    t: int,
    cache: ContextCache | None,
    config: TrainConfig,
    progress_callback: ProgressCallback | None = None,
) -> StageParams:
    """Train stage t of a cascade in place.

    Pairs are drawn uniformly with replacement; one drawn pair counts as one
    update whether or not it yields a step. Validation recall@k is measured before
    the first update and then every ``eval_every`` updates.

    Args:
        model: Cascade whose stages ``< t`` are trained; stage t is modified.
        train: Training pairs.
        valid: Validation pairs.
        t: Stage index.
        cache: Previous-stage lists of the training queries; None at stage 0.
        config: Training configuration.
        progress_callback: Called after every evaluation; returning False stops
            training.

    Returns:
        A copy of the stage parameters with the best validation recall.

    Raises:
        ConfigurationError: If a pair set is empty.
        ContractViolation: If the cache does not match the stage.
        NumericalError: If a parameter becomes non-finite.
    """
    _check_step_inputs(train, valid)
    if t == 0 and cache is not None:
        raise ContractViolation("stage 0 trains without a context cache")
    if t > 0:
        if cache is None:
            raise ContractViolation(f"stage {t} needs the context cache of stage {t - 1}")
        missing = [qid for qid in train.unique_queries().tolist() if qid not in cache]
        if missing:
            raise ContractViolation(f"context cache misses {len(missing)} training queries")

    stage = model.stages[t]
    weights = model.weights()
    k = model.k
    valid_cache = cache_top_k(model, valid, t - 1, k) if t > 0 else None
    rng = np.random.default_rng([config.seed, t])

    logger.info(f"Training stage {t}: {len(train)} pairs, {len(valid)} validation pairs")

    updates = 0
    best_recall = validation_recall(stage, valid, k, weights, valid_cache)
    best = stage.copy()
    stale = 0
    _log_progress(t, updates, k, best_recall)

    period = 0
    while updates < config.max_updates:
        count = min(config.eval_every, config.max_updates - updates)
        if config.workers > 1:
            _run_hogwild(stage, train, cache, weights, config, t, period, count)
        else:
            _run_updates(stage, train, cache, weights, config, rng, count)
        updates += count
        period += 1

        if not stage.is_finite():
            raise NumericalError(f"non-finite parameters in stage {t} after {updates} updates")

        recall = validation_recall(stage, valid, k, weights, valid_cache)
        _log_progress(t, updates, k, recall)
        if recall > best_recall:
            best_recall, best, stale = recall, stage.copy(), 0
        else:
            stale += 1

        if progress_callback is not None and not progress_callback(t, updates, recall):
            logger.warning(f"Stage {t} stopped by the progress callback at {updates} updates")
            break
        if stale >= config.patience:
            logger.info(f"Stage {t}: no improvement for {stale} evaluations, stopping")
            break

    logger.info(f"Stage {t} finished: best valid_recall@{k}={best_recall:.6f}")
    return best


def cache_top_k(model: Model, pairs: PairSet, t: int, k: int) -> ContextCache:
    """Iterative-inference lists after stage t for every query of a pair set.

    Args:
        model: Cascade with stages ``0..t`` trained.
        pairs: Pairs whose distinct queries are cached.
        t: Last stage to run.
        k: List length.

    Returns:
        ContextCache of stage t.
    """
    config = InferenceConfig(k=k, strategy="iterative", stages_to_run=t)
    lists = {
        query_id: np.array(
            inference_service.infer_iterative(model, pairs.query_for(query_id), config).final.items,
            dtype=np.int64,
        )
        for query_id in pairs.unique_queries().tolist()
    }
    logger.debug(f"Cached top-{k} lists of stage {t} for {len(lists)} queries")
    return ContextCache(stage=t, lists=lists)


def _check_compatible(train: PairSet, valid: PairSet) -> None:
    if train.query_vocab != valid.query_vocab or train.item_vocab != valid.item_vocab:
        raise DataError("training and validation pairs use different vocabularies")
    if train.n_query_features != valid.n_query_features:
        raise DataError("training and validation queries differ in dimension")


def train(
    train_pairs: PairSet,
    valid_pairs: PairSet,
    config: TrainConfig,
    progress_callback: ProgressCallback | None = None,
) -> Model:
    """Train a whole cascade, stage by stage.

    Args:
        train_pairs: Training pairs.
        valid_pairs: Validation pairs sharing the training vocabularies.
        config: Training configuration.
        progress_callback: Forwarded to every ``train_stage`` call.

    Returns:
        The trained Model with stages ``0..config.stages``.
    """
    _check_compatible(train_pairs, valid_pairs)
    _check_step_inputs(train_pairs, valid_pairs)
    if config.k > train_pairs.n_items:
        raise ConfigurationError(f"k={config.k} exceeds the item count {train_pairs.n_items}")

    model = init_model(
        config.dim,
        train_pairs.n_query_features,
        train_pairs.n_items,
        config.stages,
        config.k,
        config.weight_scheme,
        config.seed,
        config.structure_init,
    )
    logger.info(f"Training {model} with loss={config.loss} workers={config.workers}")

    cache: ContextCache | None = None
    for t in range(config.stages + 1):
        if config.warm_start and t > 0:
            previous = model.stages[t - 1]
            model.stages[t].U[:] = previous.U
            model.stages[t].V[:] = previous.V
        model.stages[t] = train_stage(
            model, train_pairs, valid_pairs, t, cache, config, progress_callback
        )
        if t < config.stages:
            cache = cache_top_k(model, train_pairs, t, config.k)

    return model
