"""Run configuration schemas."""

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

LossName = Literal["warp", "auc"]
StrategyName = Literal["unstructured", "greedy", "beam", "iterative"]
WeightSchemeName = Literal["sparse", "dense"]


# Optimization hyperparameters shared by every stage
class HyperParams(BaseModel):
    """SGD hyperparameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(default=0.05, gt=0)
    C: float = Field(default=1.0, gt=0, description="Maximum column norm")
    margin: float = Field(default=1.0, description="Hinge margin")
    loss: LossName = "warp"
    seed: int = 0


# Full training configuration
class TrainConfig(HyperParams):
    """Training configuration for a whole cascade."""

    stages: int = Field(default=1, ge=0, description="Index T of the last stage")
    dim: int = Field(default=50, ge=1, description="Latent dimension n")
    k: int = Field(default=20, ge=1)
    weight_scheme: WeightSchemeName = "sparse"
    eval_every: int = Field(default=50_000, ge=1)
    patience: int = Field(default=3, ge=1)
    max_updates: int = Field(default=1_000_000, ge=0)
    freeze_context: bool = False
    warm_start: bool = False
    structure_init: float = Field(
        default=1.0, gt=0, description="Scale of the initial structure matrices"
    )
    workers: int = Field(default=1, ge=1)


# Inference configuration
class InferenceConfig(BaseModel):
    """How to produce a ranked list from a trained model."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(default=20, ge=1)
    strategy: StrategyName = "iterative"
    beam_width: int = Field(default=4, ge=1)
    stages_to_run: int | None = Field(
        default=None, ge=0, description="Last cascade stage to use; None means all"
    )


# Day-based split rule
class SplitRule(BaseModel):
    """Which calendar days go to the test split."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    test_day_modulus: int = Field(default=5, ge=2)


# Ingestion: day split plus validation hold-out
class IngestConfig(SplitRule):
    """How an events file is turned into train, validation and test pairs."""

    valid_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    valid_count: int | None = Field(
        default=None, ge=0, description="Validation pair count; overrides valid_fraction"
    )
    seed: int = 0
    drop_self_pairs: bool = False

    @property
    def valid_size(self) -> int | float:
        """Count when given, fraction otherwise."""
        return self.valid_count if self.valid_count is not None else self.valid_fraction


# Evaluation output configuration
class EvalConfig(BaseModel):
    """Cutoffs and output format of an evaluation run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ks: list[int] = Field(default=[5, 10, 30, 50], min_length=1)
    output_format: Literal["kv", "json"] = "kv"

    @field_validator("ks", mode="before")
    @classmethod
    def parse_ks(cls, v: Any) -> list[int]:
        """Parse cutoffs from a comma-separated string or a list."""
        if isinstance(v, str):
            return [int(k.strip()) for k in v.split(",") if k.strip()]
        return v

    @field_validator("ks")
    @classmethod
    def check_ks(cls, v: list[int]) -> list[int]:
        """Cutoffs are positive; returned sorted without duplicates."""
        if any(k < 1 for k in v):
            raise ValueError("cutoffs must be >= 1")
        return sorted(set(v))


# Synthetic structured benchmark
class BenchmarkConfig(BaseModel):
    """Generator and training settings of the synthetic structured benchmark."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seeds: int = Field(default=10, ge=1)
    n_items: int = Field(default=500, ge=2)
    n_clusters: int = Field(default=10, ge=2)
    n_queries: int = Field(default=100, ge=1)
    train_per_query: int = Field(default=40, ge=1)
    valid_per_query: int = Field(default=10, ge=1)
    test_per_query: int = Field(default=10, ge=1)
    decoy_rate: float = Field(default=0.3, ge=0.0, lt=1.0)
    decoys_per_query: int = Field(default=3, ge=1)
    popular_pool: int = Field(default=30, ge=1)
    zipf_exponent: float = Field(default=1.0, gt=0)

    dim: int = Field(default=16, ge=1)
    k: int = Field(default=5, ge=1)
    learning_rate: float = Field(default=0.05, gt=0)
    C: float = Field(default=1.5, gt=0)
    eval_every: int = Field(default=3_000, ge=1)
    patience: int = Field(default=3, ge=1)
    max_updates: int = Field(default=30_000, ge=0)
    structure_init: float = Field(default=0.1, gt=0)

    @model_validator(mode="after")
    def check_sizes(self) -> "BenchmarkConfig":
        """Clusters, decoy pool and cutoff must fit in the item set."""
        if self.n_clusters > self.n_items:
            raise ValueError("more clusters than items")
        largest_cluster = -(-self.n_items // self.n_clusters)
        if not self.decoys_per_query <= self.popular_pool <= self.n_items - largest_cluster:
            raise ValueError("decoys_per_query <= popular_pool <= items outside a cluster")
        if self.k > self.n_items // self.n_clusters:
            raise ValueError("k exceeds the cluster size")
        return self
