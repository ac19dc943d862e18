"""Context-aware relevance baseline.

Each quote gets one tf-idf profile aggregated over all its training
contexts; a query is scored by cosine similarity against every profile.
The model also exposes itself as a quote index plus a query-encoding
function, so the shared evaluator and tie rule apply unchanged (softmax
over cosines is rank-preserving).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus.types import ContextQuotePair
from .index import QuoteIndex

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def crm_tokenize(text: str, unit: str = "word") -> list[str]:
    """Word terms for segmented languages, character bigrams otherwise."""
    if unit == "word":
        return _WORD_RE.findall(text.casefold())
    chars = [c for c in text.casefold() if not c.isspace()]
    return ["".join(p) for p in zip(chars, chars[1:])] or ["".join(chars)]


@dataclass
class QuoteProfile:
    quote_id: int
    weights: dict[str, float]  # L2-normalized tf-idf


class CrmModel:
    """tf-idf profiles over training contexts, one document per quote."""

    def __init__(self, train_pairs: Iterable[ContextQuotePair],
                 quote_ids: Sequence[int], unit: str = "word"):
        self.unit = unit
        self.quote_ids = np.array(sorted(int(q) for q in quote_ids), dtype=np.int64)

        term_counts: dict[int, dict[str, int]] = {int(q): {} for q in self.quote_ids}
        for p in train_pairs:
            if p.quote_id not in term_counts:
                continue
            for term in crm_tokenize(p.left + " " + p.right, unit):
                counts = term_counts[p.quote_id]
                counts[term] = counts.get(term, 0) + 1

        num_docs = sum(1 for c in term_counts.values() if c)
        df: dict[str, int] = {}
        for counts in term_counts.values():
            for term in counts:
                df[term] = df.get(term, 0) + 1
        self._num_docs = num_docs
        self._df = df

        self.profiles: dict[int, QuoteProfile] = {}
        for qid, counts in term_counts.items():
            weights = {t: tf * self.idf(t) for t, tf in counts.items()}
            norm = math.sqrt(sum(w * w for w in weights.values()))
            if norm > 0:
                weights = {t: w / norm for t, w in weights.items()}
            self.profiles[qid] = QuoteProfile(quote_id=qid, weights=weights)

        self._terms = sorted({t for p in self.profiles.values() for t in p.weights})
        self._term_pos = {t: i for i, t in enumerate(self._terms)}
        matrix = np.zeros((len(self.quote_ids), len(self._terms)))
        for row, qid in enumerate(self.quote_ids):
            for t, w in self.profiles[int(qid)].weights.items():
                matrix[row, self._term_pos[t]] = w
        self._matrix = matrix

    def idf(self, term: str) -> float:
        return math.log((1 + self._num_docs) / (1 + self._df.get(term, 0))) + 1.0

    def query_vector(self, text: str) -> np.ndarray:
        """Unit-norm query tf-idf projected onto the profile term space.

        The norm includes out-of-profile-vocabulary query terms, so dot
        products with profile rows are true cosines.
        """
        tf: dict[str, int] = {}
        for term in crm_tokenize(text, self.unit):
            tf[term] = tf.get(term, 0) + 1
        weights = {t: c * self.idf(t) for t, c in tf.items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        vec = np.zeros(len(self._terms))
        if norm == 0:
            return vec
        for t, w in weights.items():
            pos = self._term_pos.get(t)
            if pos is not None:
                vec[pos] = w / norm
        return vec

    def crm_scores(self, query_text: str) -> np.ndarray:
        """Cosine similarity to each profile, aligned with ``quote_ids``."""
        return self._matrix @ self.query_vector(query_text)

    # -- shared evaluator interface ----------------------------------------

    def to_index(self) -> QuoteIndex:
        return QuoteIndex(matrix=self._matrix, quote_ids=self.quote_ids,
                          fingerprint="crm")

    def encode_context(self, left: str, right: str = "") -> np.ndarray:
        return self.query_vector(left + " " + right)
