"""Pydantic schemas package."""

from lasr.schemas.config import (
    BenchmarkConfig,
    EvalConfig,
    HyperParams,
    InferenceConfig,
    IngestConfig,
    SplitRule,
    TrainConfig,
)
from lasr.schemas.report import BenchmarkReport, EvalReport, SeedResult

__all__ = [
    # Configuration schemas
    "HyperParams",
    "TrainConfig",
    "InferenceConfig",
    "SplitRule",
    "IngestConfig",
    "EvalConfig",
    "BenchmarkConfig",
    # Report schemas
    "EvalReport",
    "SeedResult",
    "BenchmarkReport",
]
