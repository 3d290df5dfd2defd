"""Synthetic structured benchmark.

Items belong to clusters (``cluster(d) = d % n_clusters``). Every query has a
home cluster; its training positives come from the home cluster, except that a
fraction of them are popular decoy items from other clusters, which gives the
decoys a high query affinity. Validation and test positives come from the home
cluster only, so a model that exploits list coherence should push the decoys
out of the top of the list.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from lasr.models.pairs import PairSet, Vocabulary
from lasr.models.stage import Model
from lasr.schemas.config import BenchmarkConfig, InferenceConfig, TrainConfig
from lasr.schemas.report import BenchmarkReport, SeedResult
from lasr.services import evaluation_service, trainer_service
from lasr.services.dataset_service import encode_pairs

logger = logging.getLogger(__name__)


@dataclass
class SyntheticDataset:
    """Encoded splits of one generated benchmark instance."""

    train: PairSet
    valid: PairSet
    test: PairSet
    home_cluster: np.ndarray
    decoys: np.ndarray


def item_cluster(d: int | np.ndarray, n_clusters: int) -> int | np.ndarray:
    """Cluster of an item id."""
    return d % n_clusters


def _zipf_popularity(n_items: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    ranks = np.empty(n_items, dtype=np.float64)
    ranks[rng.permutation(n_items)] = np.arange(1, n_items + 1)
    weights = ranks**-exponent
    return weights / weights.sum()


def generate(seed: int, config: BenchmarkConfig | None = None) -> SyntheticDataset:
    """Generate one benchmark instance.

    Args:
        seed: Generator seed.
        config: Generator settings; defaults when None.

    Returns:
        SyntheticDataset with train, validation and test pairs sharing the
        vocabularies ``q<i>`` and ``i<d>``.
    """
    config = config or BenchmarkConfig()
    rng = np.random.default_rng(seed)
    popularity = _zipf_popularity(config.n_items, config.zipf_exponent, rng)
    clusters = item_cluster(np.arange(config.n_items), config.n_clusters)
    by_popularity = np.argsort(-popularity, kind="stable")

    home = rng.integers(0, config.n_clusters, size=config.n_queries)
    decoys = np.empty((config.n_queries, config.decoys_per_query), dtype=np.int64)
    rows: dict[str, list[tuple[int, int]]] = {"train": [], "valid": [], "test": []}
    for q in range(config.n_queries):
        members = np.flatnonzero(clusters == home[q])
        p_home = popularity[members] / popularity[members].sum()
        outside = by_popularity[clusters[by_popularity] != home[q]][: config.popular_pool]
        decoys[q] = rng.choice(outside, size=config.decoys_per_query, replace=False)

        for split, count, decoy_rate in (
            ("train", config.train_per_query, config.decoy_rate),
            ("valid", config.valid_per_query, 0.0),
            ("test", config.test_per_query, 0.0),
        ):
            is_decoy = rng.random(count) < decoy_rate
            positives = rng.choice(members, size=count, p=p_home)
            positives[is_decoy] = rng.choice(decoys[q], size=int(is_decoy.sum()))
            rows[split].extend((q, int(d)) for d in positives)

    query_vocab = Vocabulary(f"q{q}" for q in range(config.n_queries))
    item_vocab = Vocabulary(f"i{d}" for d in range(config.n_items))

    def encode(split: str) -> PairSet:
        frame = pd.DataFrame(
            [(f"q{q}", f"i{d}") for q, d in rows[split]], columns=["query", "item"]
        )
        pairs, _ = encode_pairs(frame, query_vocab, item_vocab)
        return pairs

    return SyntheticDataset(encode("train"), encode("valid"), encode("test"), home, decoys)


def train_config(config: BenchmarkConfig, seed: int, stages: int, loss: str) -> TrainConfig:
    """Training settings of one benchmark model.

    Stage 1 starts from the stage-0 embeddings and a shrunken structure matrix,
    so its first evaluation ranks almost exactly like stage 0.
    """
    return TrainConfig(
        stages=stages,
        dim=config.dim,
        k=config.k,
        loss=loss,
        learning_rate=config.learning_rate,
        C=config.C,
        eval_every=config.eval_every,
        patience=config.patience,
        max_updates=config.max_updates,
        seed=seed,
        warm_start=True,
        structure_init=config.structure_init,
    )


def _recall(model: Model, data: SyntheticDataset, k: int, stages_to_run: int) -> float:
    config = InferenceConfig(k=k, strategy="iterative", stages_to_run=stages_to_run)
    report = evaluation_service.evaluate(model, data.test, [k], config)
    return report.recall_at[k]


def run_seed(seed: int, config: BenchmarkConfig) -> SeedResult:
    """Train a T=1 WARP cascade and a T=0 AUC model on one instance."""
    data = generate(seed, config)
    warp_model = trainer_service.train(
        data.train, data.valid, train_config(config, seed, stages=1, loss="warp")
    )
    auc_model = trainer_service.train(
        data.train, data.valid, train_config(config, seed, stages=0, loss="auc")
    )
    result = SeedResult(
        seed=seed,
        recall_t0=_recall(warp_model, data, config.k, 0),
        recall_t1=_recall(warp_model, data, config.k, 1),
        recall_auc=_recall(auc_model, data, config.k, 0),
    )
    logger.info(
        f"seed={seed} recall@{config.k}: t0={result.recall_t0:.4f} "
        f"t1={result.recall_t1:.4f} auc={result.recall_auc:.4f}"
    )
    return result


def run_benchmark(config: BenchmarkConfig | None = None, first_seed: int = 0) -> BenchmarkReport:
    """Run the benchmark on ``config.seeds`` consecutive seeds.

    Args:
        config: Benchmark settings; defaults when None.
        first_seed: First seed of the range.

    Returns:
        BenchmarkReport with per-seed recalls and win counts.
    """
    config = config or BenchmarkConfig()
    results = [run_seed(seed, config) for seed in range(first_seed, first_seed + config.seeds)]
    report = BenchmarkReport(k=config.k, seeds=results)
    logger.info(
        f"Benchmark finished: structure_wins={report.structure_wins}/{len(results)} "
        f"warp_wins={report.warp_wins}/{len(results)} "
        f"mean_improvement={report.mean_improvement:.4f}"
    )
    return report
