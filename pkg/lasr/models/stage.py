"""Cascade parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lasr.core.exceptions import ConfigurationError
from lasr.models.weights import WEIGHT_SCHEMES, PositionWeights


@dataclass(eq=False)
class StageParams:
    """Parameters of one cascade stage.

    Attributes:
        U: Query embedding map, n x D_q.
        V: Item embedding map, n x D_items.
        S: Structure embedding map, n x D_items. Allocated for stage 0 as well,
            where inference never reads it.
    """

    U: np.ndarray
    V: np.ndarray
    S: np.ndarray

    def __post_init__(self) -> None:
        if self.U.ndim != 2 or self.V.ndim != 2 or self.S.ndim != 2:
            raise ConfigurationError("stage matrices must be two-dimensional")
        if not (self.U.shape[0] == self.V.shape[0] == self.S.shape[0]):
            raise ConfigurationError("stage matrices disagree on the latent dimension")
        if self.V.shape != self.S.shape:
            raise ConfigurationError("V and S must have the same shape")

    @property
    def n(self) -> int:
        """Latent dimension."""
        return int(self.U.shape[0])

    @property
    def n_query_features(self) -> int:
        """Query vocabulary or feature size D_q."""
        return int(self.U.shape[1])

    @property
    def n_items(self) -> int:
        """Item count D_items."""
        return int(self.V.shape[1])

    def copy(self) -> StageParams:
        """Deep copy of all three matrices."""
        return StageParams(self.U.copy(), self.V.copy(), self.S.copy())

    def is_finite(self) -> bool:
        """True when no matrix holds NaN or Inf."""
        return bool(
            np.isfinite(self.U).all() and np.isfinite(self.V).all() and np.isfinite(self.S).all()
        )

    def max_column_norm(self) -> float:
        """Largest column norm over U, V and S."""
        return max(
            float(np.linalg.norm(m.astype(np.float64), axis=0).max())
            for m in (self.U, self.V, self.S)
        )

    def __repr__(self) -> str:
        """String representation of StageParams."""
        return (
            f"<StageParams(n={self.n}, D_q={self.n_query_features}, "
            f"D_items={self.n_items}, dtype={self.U.dtype})>"
        )


@dataclass(eq=False)
class Model:
    """Cascade of T + 1 stages sharing dimensions and the top-k cutoff.

    Attributes:
        stages: Stage parameters indexed t = 0..T.
        k: Top-k cutoff of the position weights.
        weight_scheme: ``sparse`` or ``dense`` position weights.
    """

    stages: list[StageParams]
    k: int
    weight_scheme: str = "sparse"
    _weights: PositionWeights | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.stages:
            raise ConfigurationError("a model needs at least one stage")
        shape = (self.stages[0].n, self.stages[0].n_query_features, self.stages[0].n_items)
        for stage in self.stages[1:]:
            if (stage.n, stage.n_query_features, stage.n_items) != shape:
                raise ConfigurationError("all stages must share (n, D_q, D_items)")
        if not 1 <= self.k <= shape[2]:
            raise ConfigurationError(f"k must lie in [1, {shape[2]}], got {self.k}")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ConfigurationError(f"unknown weight scheme: {self.weight_scheme}")

    @property
    def T(self) -> int:
        """Index of the last stage."""
        return len(self.stages) - 1

    @property
    def n(self) -> int:
        return self.stages[0].n

    @property
    def n_query_features(self) -> int:
        return self.stages[0].n_query_features

    @property
    def n_items(self) -> int:
        return self.stages[0].n_items

    def weights(self) -> PositionWeights:
        """Position weights of this model (built once)."""
        if self._weights is None:
            self._weights = PositionWeights.harmonic(self.k, self.weight_scheme, self.n_items)
        return self._weights

    def __repr__(self) -> str:
        """String representation of Model."""
        return (
            f"<Model(stages={len(self.stages)}, n={self.n}, D_q={self.n_query_features}, "
            f"D_items={self.n_items}, k={self.k}, weight_scheme='{self.weight_scheme}')>"
        )
