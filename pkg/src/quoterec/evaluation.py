"""Ranking metrics and evaluation harnesses.

Aggregates: MRR, NDCG@5, Recall@{1,10,100}, and median/mean/std of the
gold ranks. NDCG@K uses gain (2^rel - 1)/log2(rank+1) with a single
relevant item and normalizer 1, so it equals DCG@K. The median for even
counts is the lower middle element (keeps ranks integral) and the std is
the population standard deviation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus.types import ContextQuotePair
from .index import QuoteIndex
from .ranking import gold_rank, rank_scores

DEFAULT_RECALL_KS = (1, 10, 100)
DEFAULT_BUCKET_EDGES = (0, 1, 6, 11, 21, 51, 101, 151, 201)


# ---------------------------------------------------------------------------
# Metrics

def mrr(ranks: Sequence[int]) -> float:
    """Mean of reciprocal gold ranks."""
    if len(ranks) == 0:
        raise ValueError("mrr of empty rank list")
    return float(np.mean([1.0 / r for r in ranks]))


def ndcg_at_k(rank: int, k: int = 5) -> float:
    """Discounted gain of a single gold item at ``rank``, 0 beyond ``k``."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    if rank > k:
        return 0.0
    return 1.0 / math.log2(rank + 1)


def mean_ndcg_at_k(ranks: Sequence[int], k: int = 5) -> float:
    if len(ranks) == 0:
        raise ValueError("ndcg of empty rank list")
    return float(np.mean([ndcg_at_k(r, k) for r in ranks]))


def recall_at_k(ranks: Sequence[int], k: int) -> float:
    """Fraction of queries whose gold rank is <= k."""
    if len(ranks) == 0:
        raise ValueError("recall of empty rank list")
    return float(np.mean([1.0 if r <= k else 0.0 for r in ranks]))


def rank_stats(ranks: Sequence[int]) -> tuple[float, float, float]:
    """(median, mean, population std); even-count median is the lower middle."""
    if len(ranks) == 0:
        raise ValueError("rank_stats of empty rank list")
    ordered = sorted(ranks)
    median = float(ordered[(len(ordered) - 1) // 2])
    mean = float(np.mean(ordered))
    std = float(np.std(ordered))  # population std
    return median, mean, std


# ---------------------------------------------------------------------------
# Reports

@dataclass
class QueryRecord:
    context_index: int
    gold_quote_id: int
    gold_rank: int


@dataclass
class EvalReport:
    mode: str                     # "full" | "left_only"
    records: list[QueryRecord]
    recall_ks: tuple[int, ...] = DEFAULT_RECALL_KS
    mrr: float = field(init=False)
    ndcg5: float = field(init=False)
    recall: dict[int, float] = field(init=False)
    median_rank: float = field(init=False)
    mean_rank: float = field(init=False)
    std_rank: float = field(init=False)

    def __post_init__(self) -> None:
        ranks = [r.gold_rank for r in self.records]
        self.mrr = mrr(ranks)
        self.ndcg5 = mean_ndcg_at_k(ranks, 5)
        self.recall = {k: recall_at_k(ranks, k) for k in self.recall_ks}
        self.median_rank, self.mean_rank, self.std_rank = rank_stats(ranks)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "num_queries": len(self.records),
            "mrr": self.mrr,
            "ndcg@5": self.ndcg5,
            "recall": {str(k): v for k, v in self.recall.items()},
            "median_rank": self.median_rank,
            "mean_rank": self.mean_rank,
            "std_rank": self.std_rank,
            "records": [
                {"context_index": r.context_index, "gold_quote_id": r.gold_quote_id,
                 "gold_rank": r.gold_rank}
                for r in self.records
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")


@dataclass
class BucketResult:
    low: int                      # inclusive
    high: int | None              # exclusive; None = unbounded
    quote_count: int
    num_queries: int
    mrr: float | None
    ndcg5: float | None


@dataclass
class FrequencyBucketReport:
    edges: tuple[int, ...]
    buckets: list[BucketResult]


# ---------------------------------------------------------------------------
# Harnesses

def evaluate(
    encode_context: Callable[[str, str], np.ndarray],
    index: QuoteIndex,
    pairs: Iterable[ContextQuotePair],
    mode: str = "full",
    expected_fingerprint: str | None = None,
) -> EvalReport:
    """Rank the catalog for every pair and aggregate gold-rank metrics.

    In ``left_only`` mode the right context is dropped before encoding.
    """
    if mode not in ("full", "left_only"):
        raise ValueError(f"mode must be 'full' or 'left_only', got {mode!r}")
    records = []
    for i, pair in enumerate(pairs):
        right = "" if mode == "left_only" else pair.right
        vec = encode_context(pair.left, right)
        scores = rank_scores(vec, index, expected_fingerprint)
        records.append(QueryRecord(i, pair.quote_id, gold_rank(scores, pair.quote_id)))
    if not records:
        raise ValueError("empty evaluation split")
    return EvalReport(mode=mode, records=records)


def training_counts(pairs: Iterable[ContextQuotePair], quote_ids: Iterable[int]) -> dict[int, int]:
    counts = {int(q): 0 for q in quote_ids}
    for p in pairs:
        if p.split == "train" and p.quote_id in counts:
            counts[p.quote_id] += 1
    return counts


def frequency_buckets(
    report: EvalReport,
    train_counts: dict[int, int],
    edges: Sequence[int] = DEFAULT_BUCKET_EDGES,
) -> FrequencyBucketReport:
    """Group per-query metrics by the gold quote's training frequency.

    ``edges`` define right-open intervals [e0,e1), ..., plus a final
    unbounded bucket [e_last, inf). The first bucket [0,1) isolates
    zero-shot quotes when edges start (0, 1, ...).
    """
    edges = tuple(edges)
    if list(edges) != sorted(set(edges)):
        raise ValueError("edges must be strictly increasing")
    if min(train_counts.values(), default=0) < edges[0]:
        raise ValueError("some training counts fall below the first edge")

    def bucket_of(count: int) -> int:
        for i in range(len(edges) - 1):
            if edges[i] <= count < edges[i + 1]:
                return i
        return len(edges) - 1

    ranks_by_bucket: dict[int, list[int]] = {i: [] for i in range(len(edges))}
    for r in report.records:
        if r.gold_quote_id not in train_counts:
            raise ValueError(f"no training count for quote {r.gold_quote_id}")
        ranks_by_bucket[bucket_of(train_counts[r.gold_quote_id])].append(r.gold_rank)

    quotes_by_bucket: dict[int, int] = {i: 0 for i in range(len(edges))}
    for count in train_counts.values():
        quotes_by_bucket[bucket_of(count)] += 1

    buckets = []
    for i in range(len(edges)):
        high = edges[i + 1] if i < len(edges) - 1 else None
        ranks = ranks_by_bucket[i]
        buckets.append(BucketResult(
            low=edges[i], high=high,
            quote_count=quotes_by_bucket[i],
            num_queries=len(ranks),
            mrr=mrr(ranks) if ranks else None,
            ndcg5=mean_ndcg_at_k(ranks, 5) if ranks else None,
        ))
    return FrequencyBucketReport(edges=edges, buckets=buckets)


def negative_sample_sweep(
    dataset: list[ContextQuotePair],
    catalog,
    lexicon,
    n_values: Sequence[int],
    base_config,
    workdir: str | Path,
) -> dict[int, EvalReport]:
    """Train once per negative-sample count (same seed) and evaluate on valid."""
    from . import training  # local import: trainer depends on this module

    reports: dict[int, EvalReport] = {}
    for n in n_values:
        config = base_config.with_negatives(n)
        out = Path(workdir) / f"n{n}"
        model = training.run_two_stage(config, dataset, catalog, lexicon, out)
        valid = [p for p in dataset if p.split == "valid"]
        index = model.build_quote_index(catalog)
        reports[n] = evaluate(model.encode_context_vec, index, valid, "full",
                              expected_fingerprint=model.fingerprint())
    return reports
