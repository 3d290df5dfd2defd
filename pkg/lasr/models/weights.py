"""Position weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WEIGHT_SCHEMES = ("sparse", "dense")


@dataclass(frozen=True, eq=False)
class PositionWeights:
    """Per-position weights ``w_1 > w_2 > ... > 0``, implicitly zero afterwards.

    Attributes:
        values: Materialized nonzero weights, position 1 first.
        scheme: ``sparse`` (truncated at k) or ``dense`` (every position).
    """

    values: np.ndarray
    scheme: str = "sparse"

    @classmethod
    def harmonic(
        cls, k: int, scheme: str = "sparse", n_items: int | None = None
    ) -> PositionWeights:
        """Harmonic weights 1/i, truncated at k (sparse) or up to n_items (dense).

        Args:
            k: Cutoff of the sparse scheme; must be >= 1.
            scheme: ``sparse`` or ``dense``.
            n_items: Item count, required by the dense scheme.

        Returns:
            The materialized weights.
        """
        if scheme == "sparse":
            length = k
        elif scheme == "dense":
            if n_items is None:
                raise ValueError("dense weights need the item count")
            length = n_items
        else:
            raise ValueError(f"unknown weight scheme: {scheme}")
        values = 1.0 / np.arange(1, length + 1, dtype=np.float64)
        return cls(values=values, scheme=scheme)

    @property
    def nonzeros(self) -> int:
        """Number of materialized nonzero weights."""
        return int(self.values.size)

    def at(self, position: int) -> float:
        """Weight of a 1-based position."""
        if position < 1 or position > self.values.size:
            return 0.0
        return float(self.values[position - 1])

    def head(self, length: int) -> np.ndarray:
        """Weights of positions ``1..length`` as a float64 vector."""
        out = np.zeros(length, dtype=np.float64)
        m = min(length, self.values.size)
        out[:m] = self.values[:m]
        return out

    def __repr__(self) -> str:
        """String representation of PositionWeights."""
        return f"<PositionWeights(scheme='{self.scheme}', nonzeros={self.nonzeros})>"
