"""Shared fixtures: small random stages, tiny pair sets and event files."""

import logging
from collections.abc import Callable, Iterator
from pathlib import Path

import numpy as np
import pytest

from lasr.models.pairs import PairSet, Vocabulary
from lasr.models.stage import Model, StageParams
from lasr.services.model_service import init_stage

# 2023-12-09 00:00:00 UTC, a day boundary
DAY0 = 19_700 * 86_400
HOUR = 3_600
DAY = 86_400


@pytest.fixture(autouse=True)
def reset_package_logging() -> Iterator[None]:
    """Drop handlers installed by ``main`` so captured streams never leak between tests."""
    yield
    root = logging.getLogger("lasr")
    for handler in list(root.handlers):
        if getattr(handler, "_lasr_console", False):
            root.removeHandler(handler)
    root.setLevel(logging.NOTSET)


@pytest.fixture
def make_stage() -> Callable[..., StageParams]:
    """Factory of random float64 stages."""

    def _make(
        n: int = 4, n_query_features: int = 5, n_items: int = 8, seed: int = 0
    ) -> StageParams:
        return init_stage(n, n_query_features, n_items, seed, dtype=np.float64)

    return _make


@pytest.fixture
def make_model(make_stage: Callable[..., StageParams]) -> Callable[..., Model]:
    """Factory of random float64 cascades."""

    def _make(
        stages: int = 1,
        n: int = 4,
        n_query_features: int = 5,
        n_items: int = 8,
        k: int = 3,
        seed: int = 0,
        zero_structure: bool = False,
    ) -> Model:
        params = [
            make_stage(n, n_query_features, n_items, seed + 101 * t) for t in range(stages + 1)
        ]
        if zero_structure:
            for stage in params:
                stage.S[:] = 0.0
        return Model(stages=params, k=k)

    return _make


@pytest.fixture
def separable_pairs() -> PairSet:
    """Ten queries, each paired 20 times with the item of the same index."""
    query_vocab = Vocabulary(f"q{i}" for i in range(10))
    item_vocab = Vocabulary(f"i{i}" for i in range(10))
    ids = np.repeat(np.arange(10), 20)
    return PairSet(ids, ids.copy(), query_vocab, item_vocab)


@pytest.fixture
def tiny_events_file(tmp_path: Path) -> Path:
    """Three users over five days; day index 4 is the only test day at modulus 5.

    Training events per user: u1 plays A B C (day 0) then A B (day 1), u2 plays
    B C (day 0), u3 plays C A B (day 2). Test events: u2 plays C A and u3 plays
    A on day 4.
    """
    rows = [
        ("u2", DAY0 + 2 * HOUR, "B"),
        ("u1", DAY0 + 1 * HOUR, "A"),
        ("u1", DAY0 + 2 * HOUR, "B"),
        ("u1", DAY0 + 3 * HOUR, "C"),
        ("u2", DAY0 + 3 * HOUR, "C"),
        ("u1", DAY0 + DAY + HOUR, "A"),
        ("u1", DAY0 + DAY + 2 * HOUR, "B"),
        ("u3", DAY0 + 2 * DAY + HOUR, "C"),
        ("u3", DAY0 + 2 * DAY + 2 * HOUR, "A"),
        ("u3", DAY0 + 2 * DAY + 3 * HOUR, "B"),
        ("u2", DAY0 + 4 * DAY + HOUR, "C"),
        ("u2", DAY0 + 4 * DAY + 2 * HOUR, "A"),
        ("u3", DAY0 + 4 * DAY + 5 * HOUR, "A"),
    ]
    path = tmp_path / "events.tsv"
    path.write_text("".join(f"{u}\t{ts}\t{item}\n" for u, ts, item in rows), encoding="utf-8")
    return path
