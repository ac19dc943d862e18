"""Scoring candidate quotes for a query context.

Scores are a softmax over dot products between the context vector and
every row of the quote index. Ties are broken by ascending quote id so
that rankings (and therefore all metrics) are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .index import QuoteIndex


@dataclass
class RankScores:
    """Normalized probability over the catalog, aligned with ``quote_ids``."""

    probs: np.ndarray
    quote_ids: np.ndarray

    def __post_init__(self) -> None:
        if abs(float(self.probs.sum()) - 1.0) > 1e-6:
            raise ValueError("rank scores must sum to 1")


RankedList = list[tuple[int, float, int]]  # (quote_id, score, 1-based rank)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stabilized softmax (max subtraction)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def rank_scores(
    context_vec: np.ndarray,
    index: QuoteIndex,
    expected_fingerprint: str | None = None,
) -> RankScores:
    """softmax(Q^T c) over the whole catalog."""
    if expected_fingerprint is not None:
        index.verify(expected_fingerprint)
    c = np.asarray(context_vec, dtype=np.float64)
    if c.shape != (index.matrix.shape[1],):
        raise ValueError(f"context vector shape {c.shape} does not match index width")
    if not np.isfinite(c).all():
        raise ValueError("context vector contains non-finite entries")
    return RankScores(probs=softmax(index.matrix @ c), quote_ids=index.quote_ids)


def _ordering(scores: RankScores) -> np.ndarray:
    """Positions sorted by descending score, then ascending quote id."""
    return np.lexsort((scores.quote_ids, -scores.probs))


def top_k(scores: RankScores, k: int) -> RankedList:
    n = len(scores.probs)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    order = _ordering(scores)[:k]
    return [
        (int(scores.quote_ids[pos]), float(scores.probs[pos]), rank)
        for rank, pos in enumerate(order, start=1)
    ]


def gold_rank(scores: RankScores, gold_id: int) -> int:
    """1-based rank of the gold quote under the tie-broken ordering."""
    matches = np.nonzero(scores.quote_ids == gold_id)[0]
    if len(matches) == 0:
        raise KeyError(f"quote id {gold_id} not in catalog")
    pos = int(matches[0])
    p = scores.probs[pos]
    better = int(np.sum(scores.probs > p))
    tied_before = int(np.sum((scores.probs == p) & (scores.quote_ids < gold_id)))
    return better + tied_before + 1
