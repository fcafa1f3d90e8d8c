"""Ranking-function unit tests: hand-evaluated fixtures, ordering rules,
and agreement with the brute-force oracle."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from qtriage.errors import EmptyQueryError, EmptyRepositoryError, UnknownDocIdError
from qtriage.repository import LabelSchema, QuestionRecord, build_repository
from qtriage.retrieval import Bm25Params, brute_force_top_n, build_index

SCHEMA = LabelSchema(categorical=("topic",))


def _corpus(questions):
    records = [QuestionRecord(i, q, {"topic": "x"}, {}) for i, q in enumerate(questions)]
    return build_repository(records, SCHEMA)


def _random_corpus(rng, n_docs, vocab_size):
    vocab = [f"w{i}" for i in range(vocab_size)]
    questions = [
        " ".join(vocab[j] for j in rng.integers(0, vocab_size, size=rng.integers(1, 12)))
        for _ in range(n_docs)
    ]
    return _corpus(questions)


def _random_query(rng, vocab_size):
    tokens = []
    for _ in range(int(rng.integers(1, 8))):
        if rng.random() < 0.12:
            tokens.append(f"oov{rng.integers(0, 5)}")
        else:
            tokens.append(f"w{rng.integers(0, vocab_size)}")
    if len(tokens) > 1 and rng.random() < 0.3:
        tokens.append(tokens[0])  # duplicated query token
    return tokens


class TestParams:
    def test_defaults(self):
        p = Bm25Params()
        assert p.alpha == 1.2 and p.beta == 0.75

    @pytest.mark.parametrize("alpha,beta", [(0.0, 0.5), (-1.0, 0.5), (1.2, -0.1), (1.2, 1.5)])
    def test_invalid(self, alpha, beta):
        with pytest.raises(ValueError):
            Bm25Params(alpha=alpha, beta=beta)


class TestIndexStructure:
    def test_postings_direct_count(self, tiny_index):
        assert tiny_index.postings("shipping") == [(0, 1), (1, 1)]

    def test_absent_token_has_no_postings(self, tiny_index):
        assert tiny_index.postings("teleport") == []

    def test_empty_repository_rejected(self):
        repo = _corpus(["a"])
        repo.records.clear()
        repo.stats.n_docs = 0
        with pytest.raises(EmptyRepositoryError):
            build_index(repo, Bm25Params())

    def test_posting_lists_sorted_and_tf_sums(self):
        rng = np.random.default_rng(2)
        repo = _random_corpus(rng, 200, 30)
        index = build_index(repo, Bm25Params())
        per_doc = {r.id: 0 for r in repo.records}
        for token in repo.stats.doc_freq:
            postings = index.postings(token)
            ids = [d for d, _ in postings]
            assert ids == sorted(ids)
            assert len(set(ids)) == len(ids)
            for doc_id, tf in postings:
                per_doc[doc_id] += tf
        assert per_doc == repo.stats.doc_lengths


class TestIdf:
    """Hand evaluations of ln(1 + (N - n + 0.5) / (n + 0.5)) at N=3."""

    def test_two_of_three(self, tiny_index):
        assert tiny_index.idf("shipping") == pytest.approx(math.log(1.6), abs=1e-12)

    def test_in_every_doc(self):
        repo = _corpus(["a b", "a c", "a d"])
        index = build_index(repo, Bm25Params())
        assert index.idf("a") == pytest.approx(math.log(8.0 / 7.0), abs=1e-12)

    def test_unseen_token(self, tiny_index):
        assert tiny_index.idf("teleport") == pytest.approx(math.log(8.0), abs=1e-12)
        # and it cannot contribute to any score
        assert tiny_index.bm25_score(["teleport"], 0) == 0.0


class TestScore:
    def test_single_term_fixture(self, tiny_index):
        assert tiny_index.bm25_score(["shipping"], 0) == pytest.approx(
            0.47000362924573563, abs=1e-6
        )

    def test_two_term_fixture(self, tiny_index):
        assert tiny_index.bm25_score(["shipping", "refund"], 1) == pytest.approx(
            1.4508328822574619, abs=1e-6
        )

    def test_no_overlap_scores_zero(self, tiny_index):
        assert tiny_index.bm25_score(["cancel"], 0) == 0.0

    def test_unknown_doc_id(self, tiny_index):
        with pytest.raises(UnknownDocIdError):
            tiny_index.bm25_score(["shipping"], 99)

    def test_duplicate_query_token_counts_twice(self, tiny_index):
        single = tiny_index.bm25_score(["shipping"], 0)
        double = tiny_index.bm25_score(["shipping", "shipping"], 0)
        assert double == pytest.approx(2.0 * single, rel=1e-12)

    def test_additivity_over_concatenation(self):
        rng = np.random.default_rng(4)
        repo = _random_corpus(rng, 80, 25)
        index = build_index(repo, Bm25Params())
        for _ in range(100):
            q1 = _random_query(rng, 25)
            q2 = _random_query(rng, 25)
            doc = int(rng.integers(0, 80))
            joint = index.bm25_score(q1 + q2, doc)
            split = index.bm25_score(q1, doc) + index.bm25_score(q2, doc)
            assert math.isclose(joint, split, rel_tol=1e-12, abs_tol=1e-15)

    def test_more_matching_terms_never_scores_lower_at_equal_length(self):
        # doc 0 matches both query terms, doc 1 only one; lengths equal
        repo = _corpus(["red blue", "red green", "yellow pink"])
        index = build_index(repo, Bm25Params())
        q = ["red", "blue"]
        assert index.bm25_score(q, 0) >= index.bm25_score(q, 1)


class TestTopN:
    def test_tie_broken_by_ascending_id(self, tiny_index):
        results = tiny_index.top_n(["shipping"], 5)
        assert [(r.doc_id, r.rank) for r in results] == [(0, 1), (1, 2)]
        assert results[0].score == results[1].score

    def test_zero_scores_excluded(self, tiny_index):
        results = tiny_index.top_n(["shipping"], 5)
        assert all(r.score > 0 for r in results)
        assert {r.doc_id for r in results} == {0, 1}

    def test_n_one(self, tiny_index):
        results = tiny_index.top_n(["cancel"], 1)
        assert [(r.doc_id, r.rank) for r in results] == [(2, 1)]

    def test_empty_query_distinguishable(self, tiny_index):
        with pytest.raises(EmptyQueryError):
            tiny_index.top_n([], 5)

    def test_unmatched_query_returns_empty(self, tiny_index):
        assert tiny_index.top_n(["teleport"], 5) == []

    def test_invalid_n(self, tiny_index):
        with pytest.raises(ValueError):
            tiny_index.top_n(["shipping"], 0)

    def test_scores_non_increasing(self):
        rng = np.random.default_rng(6)
        repo = _random_corpus(rng, 300, 40)
        index = build_index(repo, Bm25Params())
        for _ in range(50):
            results = index.top_n(_random_query(rng, 40), int(rng.integers(1, 50)))
            scores = [r.score for r in results]
            assert scores == sorted(scores, reverse=True)
            assert [r.rank for r in results] == list(range(1, len(results) + 1))

    def test_concurrent_queries_identical(self):
        rng = np.random.default_rng(8)
        repo = _random_corpus(rng, 500, 40)
        index = build_index(repo, Bm25Params())
        queries = [_random_query(rng, 40) for _ in range(40)]
        expected = [index.top_n(q, 20) for q in queries]
        with ThreadPoolExecutor(max_workers=8) as pool:
            got = list(pool.map(lambda q: index.top_n(q, 20), queries))
        assert got == expected


class TestOracleEquivalence:
    """top_n must match the index-free scorer in ids, ranks, and scores."""

    def _check(self, repo, params, queries, n):
        index = build_index(repo, params)
        for q in queries:
            fast = index.top_n(q, n)
            slow = brute_force_top_n(repo, params, q, n)
            assert [(r.doc_id, r.rank) for r in fast] == [(r.doc_id, r.rank) for r in slow]
            for a, b in zip(fast, slow):
                assert math.isclose(a.score, b.score, rel_tol=1e-9)

    def test_small_random_corpora(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            n_docs = int(rng.integers(2, 120))
            vocab = int(rng.integers(5, 60))
            repo = _random_corpus(rng, n_docs, vocab)
            queries = [_random_query(rng, vocab) for _ in range(8)]
            self._check(repo, Bm25Params(), queries, n=int(rng.integers(1, 30)))

    def test_non_default_params(self):
        rng = np.random.default_rng(12)
        repo = _random_corpus(rng, 150, 30)
        for alpha, beta in [(0.5, 0.0), (2.0, 1.0), (1.2, 0.4)]:
            queries = [_random_query(rng, 30) for _ in range(10)]
            self._check(repo, Bm25Params(alpha, beta), queries, n=10)

    def test_single_doc_corpus(self):
        repo = _corpus(["only one doc here"])
        params = Bm25Params()
        assert brute_force_top_n(repo, params, ["doc"], 3)[0].doc_id == 0
        assert brute_force_top_n(repo, params, ["nothing"], 3) == []
