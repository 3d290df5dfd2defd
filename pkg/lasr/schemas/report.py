"""Evaluation report schema."""

import json

from pydantic import BaseModel, Field


class EvalReport(BaseModel):
    """Ranking metrics averaged over the evaluated test pairs."""

    recall_at: dict[int, float]
    precision_at: dict[int, float]
    map_score: float = Field(ge=0.0, le=1.0)
    mean_rank: float = Field(ge=1.0)
    pairs_evaluated: int = Field(ge=1)
    pairs_skipped_oov: int = Field(ge=0)

    def as_key_values(self) -> dict[str, float | int]:
        """Report under its published keys, recall cutoffs ascending."""
        values: dict[str, float | int] = {
            f"recall@{k}": self.recall_at[k] for k in sorted(self.recall_at)
        }
        values["map"] = self.map_score
        values["mean_rank"] = self.mean_rank
        values["evaluated"] = self.pairs_evaluated
        values["skipped_oov"] = self.pairs_skipped_oov
        return values

    def to_kv_lines(self) -> str:
        """One ``key=value`` line per metric."""
        lines = []
        for key, value in self.as_key_values().items():
            text = str(value) if isinstance(value, int) else f"{value:.6f}"
            lines.append(f"{key}={text}")
        return "\n".join(lines)

    def to_json(self) -> str:
        """JSON document with the same keys as ``to_kv_lines``."""
        return json.dumps(self.as_key_values(), indent=2)


class SeedResult(BaseModel):
    """Held-out recall of one benchmark seed."""

    seed: int
    recall_t0: float = Field(ge=0.0, le=1.0)
    recall_t1: float = Field(ge=0.0, le=1.0)
    recall_auc: float = Field(ge=0.0, le=1.0)


class BenchmarkReport(BaseModel):
    """Structured-benefit comparison over several seeds."""

    k: int = Field(ge=1)
    seeds: list[SeedResult]

    @property
    def structure_wins(self) -> int:
        """Seeds where the t=1 cascade matches or beats t=0."""
        return sum(1 for s in self.seeds if s.recall_t1 >= s.recall_t0)

    @property
    def warp_wins(self) -> int:
        """Seeds where WARP at t=0 matches or beats AUC at t=0."""
        return sum(1 for s in self.seeds if s.recall_t0 >= s.recall_auc)

    @property
    def mean_improvement(self) -> float:
        """Mean of recall(t=1) - recall(t=0)."""
        if not self.seeds:
            return 0.0
        return sum(s.recall_t1 - s.recall_t0 for s in self.seeds) / len(self.seeds)

    def to_kv_lines(self) -> str:
        """One line per seed followed by the summary counts."""
        lines = [
            f"seed={s.seed} recall@{self.k}_t0={s.recall_t0:.6f} "
            f"recall@{self.k}_t1={s.recall_t1:.6f} recall@{self.k}_auc={s.recall_auc:.6f}"
            for s in self.seeds
        ]
        lines.append(f"structure_wins={self.structure_wins}/{len(self.seeds)}")
        lines.append(f"warp_wins={self.warp_wins}/{len(self.seeds)}")
        lines.append(f"mean_improvement={self.mean_improvement:.6f}")
        return "\n".join(lines)
