"""Domain entities package."""

from lasr.models.pairs import ContextCache, PairSet, Vocabulary
from lasr.models.query import Query
from lasr.models.ranking import RankedList, ViolationSample
from lasr.models.stage import Model, StageParams
from lasr.models.weights import PositionWeights

__all__ = [
    # Parameters
    "StageParams",
    "Model",
    "PositionWeights",
    # Inputs and outputs
    "Query",
    "RankedList",
    "ViolationSample",
    # Training data
    "Vocabulary",
    "PairSet",
    "ContextCache",
]
