"""Sparse query vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lasr.core.exceptions import ContractViolation


@dataclass(frozen=True, eq=False)
class Query:
    """Sparse real query vector of dimension ``D_q``.

    Attributes:
        indices: Feature indices of the nonzero entries (unique, int64).
        values: Values of the nonzero entries (float64), parallel to ``indices``.
    """

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if indices.shape != values.shape:
            raise ContractViolation("query indices and values differ in length")
        keep = values != 0.0
        indices, values = indices[keep], values[keep]
        if indices.size == 0:
            raise ContractViolation("query has no nonzero entry")
        if np.unique(indices).size != indices.size:
            raise ContractViolation("query indices must be unique")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @classmethod
    def one_hot(cls, index: int) -> Query:
        """Build the indicator query of a single feature."""
        return cls(np.array([index]), np.array([1.0]))

    def check_dim(self, dim: int) -> None:
        """Raise if any index falls outside ``[0, dim)``."""
        if self.indices.min() < 0 or self.indices.max() >= dim:
            raise ContractViolation(f"query index out of range for D_q={dim}")

    def __repr__(self) -> str:
        """String representation of Query."""
        return f"<Query(nnz={self.indices.size})>"
