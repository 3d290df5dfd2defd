"""Ranked lists and sampling outcomes."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field


@dataclass(frozen=True)
class RankedList:
    """Ordered prefix of a permutation of the item set.

    Attributes:
        items: Item ids, best first; distinct.
        scores: Per-position scores parallel to ``items``. Their meaning depends on
            the strategy that produced the list (base score, context-conditioned
            score or extension gain).
    """

    items: tuple[int, ...]
    scores: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(int(i) for i in self.items))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(set(self.items)) != len(self.items):
            raise ValueError("ranked list contains repeated items")
        if self.scores and len(self.scores) != len(self.items):
            raise ValueError("scores must be parallel to items")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[int]:
        return iter(self.items)

    def __contains__(self, item: object) -> bool:
        return item in self.items


@dataclass(frozen=True)
class ViolationSample:
    """Outcome of the negative sampling loop for one training pair.

    Attributes:
        negative: Last drawn negative item, or None when nothing was drawn.
        trials: Number of draws N (1 <= N <= D_items - 1).
        violating: Whether the last draw violates the margin.
    """

    negative: int | None
    trials: int
    violating: bool
