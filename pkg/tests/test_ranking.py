"""Ranker tests against brute-force and arbitrary-precision oracles."""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quoterec.index import QuoteIndex, StaleIndexError
from quoterec.ranking import RankScores, gold_rank, rank_scores, softmax, top_k


def make_index(matrix, ids=None, fingerprint="fp"):
    matrix = np.asarray(matrix, dtype=np.float64)
    if ids is None:
        ids = np.arange(matrix.shape[0])
    return QuoteIndex(matrix=matrix, quote_ids=np.asarray(ids), fingerprint=fingerprint)


def brute_force_ranking(probs, ids):
    """Independent oracle: full sort by (-score, id)."""
    return sorted(zip(ids, probs), key=lambda t: (-t[1], t[0]))


class TestRankScores:
    def test_single_quote(self):
        scores = rank_scores(np.ones(4), make_index(np.random.randn(1, 4)))
        assert scores.probs.tolist() == [1.0]

    def test_identical_rows_equal_scores(self):
        row = np.random.randn(8)
        scores = rank_scores(np.random.randn(8), make_index([row, row]))
        assert scores.probs[0] == pytest.approx(scores.probs[1], abs=1e-15)

    def test_matches_arbitrary_precision_oracle(self):
        rng = np.random.default_rng(0)
        matrix = rng.normal(size=(7, 8))
        c = rng.normal(size=8)
        scores = rank_scores(c, make_index(matrix))

        mpmath.mp.dps = 50
        logits = [mpmath.mpf(float(matrix[i] @ c)) for i in range(7)]
        denom = sum(mpmath.e ** l for l in logits)
        expected = [float(mpmath.e ** l / denom) for l in logits]
        np.testing.assert_allclose(scores.probs, expected, atol=1e-9)

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        matrix = rng.normal(size=(5, 3))
        c = rng.normal(size=3)
        a = softmax(matrix @ c)
        b = softmax(matrix @ c + 123.456)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_stale_fingerprint(self):
        idx = make_index(np.eye(3), fingerprint="old")
        with pytest.raises(StaleIndexError):
            rank_scores(np.ones(3), idx, expected_fingerprint="new")

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            rank_scores(np.ones(5), make_index(np.eye(3)))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            rank_scores(np.array([np.nan, 0.0, 0.0]), make_index(np.eye(3)))


class TestTopK:
    def test_full_permutation(self):
        idx = make_index(np.random.randn(6, 4))
        scores = rank_scores(np.random.randn(4), idx)
        ranked = top_k(scores, 6)
        assert sorted(q for q, _, _ in ranked) == list(range(6))
        assert [r for _, _, r in ranked] == [1, 2, 3, 4, 5, 6]

    def test_tie_broken_by_ascending_id(self):
        probs = np.array([0.2, 0.1, 0.2, 0.2, 0.3])
        probs /= probs.sum()
        scores = RankScores(probs=probs, quote_ids=np.array([1, 2, 3, 5, 7]))
        ranked = top_k(scores, 5)
        # 7 highest, then ties 1 < 3 < 5, then 2
        assert [q for q, _, _ in ranked] == [7, 1, 3, 5, 2]

    def test_agrees_with_brute_force_sort(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = rng.integers(2, 20)
            scores = rank_scores(rng.normal(size=4), make_index(rng.normal(size=(n, 4))))
            expected = brute_force_ranking(scores.probs, scores.quote_ids)
            for k in (1, n // 2 + 1, n):
                got = top_k(scores, k)
                assert [q for q, _, _ in got] == [int(q) for q, _ in expected[:k]]

    def test_k_out_of_range(self):
        scores = rank_scores(np.ones(2), make_index(np.eye(2)))
        for k in (0, 3):
            with pytest.raises(ValueError):
                top_k(scores, k)


class TestGoldRank:
    def test_strict_top(self):
        scores = RankScores(probs=np.array([0.7, 0.2, 0.1]),
                            quote_ids=np.array([0, 1, 2]))
        assert gold_rank(scores, 0) == 1

    def test_tie_with_lower_id(self):
        scores = RankScores(probs=np.array([0.4, 0.4, 0.2]),
                            quote_ids=np.array([0, 1, 2]))
        assert gold_rank(scores, 1) == 2

    def test_matches_top_k_position(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(2, 25))
            scores = rank_scores(rng.normal(size=4), make_index(rng.normal(size=(n, 4))))
            ranked = top_k(scores, n)
            for qid, _, rank in ranked:
                assert gold_rank(scores, qid) == rank

    def test_unknown_id(self):
        scores = rank_scores(np.ones(2), make_index(np.eye(2)))
        with pytest.raises(KeyError):
            gold_rank(scores, 99)


class TestRankingProperties:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_monotone_consistency(self, seed):
        # raising one quote's logit never worsens its rank
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 15))
        logits = rng.normal(size=n)
        target = int(rng.integers(0, n))
        ids = np.arange(n)

        def rank_of(lg):
            scores = RankScores(probs=softmax(lg), quote_ids=ids)
            return gold_rank(scores, target)

        before = rank_of(logits)
        logits2 = logits.copy()
        logits2[target] += float(rng.uniform(0.1, 3.0))
        assert rank_of(logits2) <= before

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_gold_rank_permutation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 15))
        matrix = rng.normal(size=(n, 4))
        c = rng.normal(size=4)
        gold = int(rng.integers(0, n))
        base = gold_rank(rank_scores(c, make_index(matrix)), gold)

        perm = rng.permutation(n)
        idx = QuoteIndex(matrix=matrix[perm], quote_ids=np.arange(n)[perm],
                         fingerprint="fp")
        # ties between distinct random dot products have probability 0,
        # so reordering rows cannot change the gold rank
        assert gold_rank(rank_scores(c, idx), gold) == base
