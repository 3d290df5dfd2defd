"""Loss service: pairwise hinge, WARP rank transform and the sampled rank estimator."""

import logging
from collections.abc import Callable
from functools import lru_cache
from typing import Literal

import numpy as np

from lasr.core.exceptions import ContractViolation
from lasr.models.ranking import ViolationSample

logger = logging.getLogger(__name__)

RankSchedule = Literal["harmonic", "uniform"]
ItemScorer = Callable[[np.ndarray], np.ndarray]

# first chunk of negative draws; chunks double until the trial budget is spent
_FIRST_CHUNK = 8


def auc_hinge(f_pos: float, f_neg: float, margin: float = 1.0) -> float:
    """Pairwise violation cost ``max(0, margin - f_pos + f_neg)``."""
    return max(0.0, margin - f_pos + f_neg)


@lru_cache(maxsize=65536)
def _harmonic(r: int) -> float:
    return float(np.sum(1.0 / np.arange(1, r + 1, dtype=np.float64)))


def rank_to_loss(r: int, schedule: RankSchedule = "harmonic") -> float:
    """Transform a rank into a loss ``L(r) = sum_{i<=r} alpha_i``.

    Args:
        r: Rank, i.e. the number of violating items.
        schedule: ``harmonic`` (``alpha_i = 1/i``) or ``uniform`` (``alpha_i = 1``,
            ``L(r) = r``).

    Returns:
        The loss weight.

    Raises:
        ContractViolation: If r is negative or the schedule is unknown.
    """
    if r < 0:
        raise ContractViolation(f"rank must be >= 0, got {r}")
    if schedule == "uniform":
        return float(r)
    if schedule != "harmonic":
        raise ContractViolation(f"unknown rank schedule: {schedule}")
    return _harmonic(int(r))


def warp_weight(trials: int, n_items: int, schedule: RankSchedule = "harmonic") -> float:
    """Loss weight of a violator found after ``trials`` draws.

    The rank is estimated as ``floor((n_items - 1) / trials)``.

    Raises:
        ContractViolation: If trials lies outside ``[1, n_items - 1]``.
    """
    if not 1 <= trials <= n_items - 1:
        raise ContractViolation(f"trials must lie in [1, {n_items - 1}], got {trials}")
    return rank_to_loss((n_items - 1) // trials, schedule)


def sample_violator(
    scorer: ItemScorer,
    f_pos: float,
    positive: int,
    n_items: int,
    margin: float,
    rng: np.random.Generator,
) -> ViolationSample:
    """Draw uniform negatives until one violates the margin.

    Negatives are drawn with replacement from every item except the positive.
    Draws are scored in vectorised chunks; the outcome is the same as drawing one
    at a time because the first violator in draw order ends the loop.

    Args:
        scorer: Maps an array of item ids to their scores for the current query.
        f_pos: Score of the positive item.
        positive: Positive item id, never returned as the negative.
        n_items: Item count D_items.
        margin: Hinge margin.
        rng: Random source owned by the caller.

    Returns:
        The last drawn negative, the number of draws N and whether it violates.

    Raises:
        ContractViolation: If fewer than two items exist.
    """
    if n_items < 2:
        raise ContractViolation(f"sampling negatives needs at least 2 items, got {n_items}")

    budget = n_items - 1
    trials = 0
    last: int | None = None
    chunk = _FIRST_CHUNK
    while trials < budget:
        size = min(chunk, budget - trials)
        draws = rng.integers(0, n_items - 1, size=size)
        draws[draws >= positive] += 1
        scores = np.asarray(scorer(draws), dtype=np.float64)
        hits = np.flatnonzero(scores + margin > f_pos)
        if hits.size:
            first = int(hits[0])
            return ViolationSample(
                negative=int(draws[first]), trials=trials + first + 1, violating=True
            )
        trials += size
        last = int(draws[-1])
        chunk *= 2

    return ViolationSample(negative=last, trials=trials, violating=False)


def sample_single_negative(
    scorer: ItemScorer,
    f_pos: float,
    positive: int,
    n_items: int,
    margin: float,
    rng: np.random.Generator,
) -> ViolationSample:
    """Draw one uniform negative other than the positive (the AUC step).

    Returns:
        The negative with ``trials = 1``; it violates when ``f_neg + margin > f_pos``.

    Raises:
        ContractViolation: If fewer than two items exist.
    """
    if n_items < 2:
        raise ContractViolation(f"sampling negatives needs at least 2 items, got {n_items}")
    negative = int(rng.integers(n_items - 1))
    if negative >= positive:
        negative += 1
    f_neg = float(scorer(np.array([negative]))[0])
    return ViolationSample(negative=negative, trials=1, violating=f_neg + margin > f_pos)


def sample_negative(
    loss: str,
    scorer: ItemScorer,
    f_pos: float,
    positive: int,
    n_items: int,
    margin: float,
    rng: np.random.Generator,
) -> ViolationSample:
    """Negative of one training pair: WARP searches for a violator, AUC draws once."""
    if loss == "warp":
        return sample_violator(scorer, f_pos, positive, n_items, margin, rng)
    return sample_single_negative(scorer, f_pos, positive, n_items, margin, rng)


def exact_margin_rank(
scores: np.ndarray, positive: int, margin: float = 1.0) -> int:
    """Number of other items with a positive hinge loss against the positive.

    Args:
        scores: Score of every item.
        positive: Positive item id.
        margin: Hinge margin.

    Returns:
        ``#{j != positive : margin + f_j > f_pos}``. An item exactly on the margin
        boundary has zero hinge loss and is not counted.
    """
    f_pos = scores[positive]
    violators = margin + scores > f_pos
    violators[positive] = False
    return int(np.count_nonzero(violators))


def step_multiplier(sample: ViolationSample, n_items: int, loss: str) -> float:
    """SGD multiplier of a sampled pair: 0 for a non-violating sample.

    WARP weighs the hinge by ``L(floor((D - 1) / N))`` with harmonic ``alpha``;
    AUC takes a plain unit step on its single violating negative.
    """
    if not sample.violating:
        return 0.0
    if loss == "warp":
        return warp_weight(sample.trials, n_items)
    return 1.0
