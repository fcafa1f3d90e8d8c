"""Okapi BM25 ranking over an inverted index, plus a brute-force oracle.

The score of a key document k for a query q is

    sum_i idf(q_i) * tf(q_i, k) * (alpha + 1)
          / (tf(q_i, k) + alpha * (1 - beta + beta * |k| / avg|k|))

summed over query token *positions*, so a token repeated in the query
contributes once per occurrence. The IDF is the non-negative smoothed
variant ln(1 + (N - n + 0.5) / (n + 0.5)); scores are therefore never
negative, and a document sharing no token with the query scores exactly 0.

Two scorers ship: ``InvertedIndex`` (posting lists, numpy accumulation,
the fast path) and ``brute_force_top_n`` (direct evaluation over every
record, no shared index structures) used as the equivalence oracle. Both
evaluate the same expression in the same order, so agreement is exact.

Ordering contract everywhere: descending score, then ascending doc id;
zero-score documents are excluded, so a top-100 request over a sparse
match may legitimately return fewer than 100 results.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .errors import EmptyQueryError, EmptyRepositoryError, UnknownDocIdError
from .repository import Repository
from .text import tokenize


@dataclass(frozen=True)
class Bm25Params:
    """Free parameters: alpha saturates TF, beta normalizes by length."""

    alpha: float = 1.2
    beta: float = 0.75

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class RetrievalResult:
    doc_id: int
    score: float
    rank: int  # 1-based


class InvertedIndex:
    """Posting lists over a repository, immutable after build.

    Postings map token -> (doc ids ascending, term frequencies); document
    ids follow repository order. All queries are read-only and safe to run
    concurrently.
    """

    def __init__(self, repo: Repository, params: Bm25Params):
        if len(repo) == 0:
            raise EmptyRepositoryError("cannot index an empty repository")
        self.stats = repo.stats
        self.params = params
        self.n_docs = repo.stats.n_docs

        self._ids = np.array([rec.id for rec in repo.records], dtype=np.int64)
        self._pos_of = {int(doc_id): pos for pos, doc_id in enumerate(self._ids)}

        lengths = np.array(
            [repo.stats.doc_lengths[rec.id] for rec in repo.records], dtype=np.float64
        )
        avg = repo.stats.avg_doc_length
        alpha, beta = params.alpha, params.beta
        # per-document denominator base: alpha * (1 - beta + beta * |k|/avg)
        self._denom = alpha * (1.0 - beta + beta * (lengths / avg))

        by_token: dict[str, tuple[list[int], list[int]]] = {}
        for pos, rec in enumerate(repo.records):
            for token, count in Counter(tokenize(rec.question)).items():
                entry = by_token.setdefault(token, ([], []))
                entry[0].append(pos)
                entry[1].append(count)
        self._postings = {
            token: (np.array(positions, dtype=np.int64), np.array(counts, dtype=np.float64))
            for token, (positions, counts) in by_token.items()
        }
        n = float(self.n_docs)
        self._idf = {
            token: math.log(1.0 + (n - positions.size + 0.5) / (positions.size + 0.5))
            for token, (positions, _) in self._postings.items()
        }

    def postings(self, token: str) -> list[tuple[int, int]]:
        """(doc id, term frequency) pairs, ascending by id; [] if unseen."""
        entry = self._postings.get(token)
        if entry is None:
            return []
        positions, counts = entry
        return [(int(self._ids[p]), int(c)) for p, c in zip(positions, counts)]

    def idf(self, token: str) -> float:
        """Smoothed inverse document frequency; degenerates safely for
        unseen tokens (their TF is 0 everywhere, so they contribute 0)."""
        cached = self._idf.get(token)
        if cached is not None:
            return cached
        n = float(self.n_docs)
        return math.log(1.0 + (n + 0.5) / 0.5)

    def bm25_score(self, query_tokens: Sequence[str], doc_id: int) -> float:
        """Score one document; contributions added in query-token order."""
        pos = self._pos_of.get(doc_id)
        if pos is None:
            raise UnknownDocIdError(doc_id)
        alpha_plus_1 = self.params.alpha + 1.0
        denom_base = float(self._denom[pos])
        score = 0.0
        for token in query_tokens:
            entry = self._postings.get(token)
            if entry is None:
                continue
            positions, counts = entry
            j = int(np.searchsorted(positions, pos))
            if j >= positions.size or positions[j] != pos:
                continue
            tf = float(counts[j])
            score += self._idf[token] * (tf * alpha_plus_1) / (tf + denom_base)
        return score

    def top_n(self, query_tokens: Sequence[str], n: int) -> list[RetrievalResult]:
        """The n best documents with nonzero score.

        Raises EmptyQueryError when the query has no tokens (distinct from
        a query whose tokens simply match nothing, which returns []).
        """
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if not query_tokens:
            raise EmptyQueryError("query has no tokens")

        scores = np.zeros(self.n_docs, dtype=np.float64)
        alpha_plus_1 = self.params.alpha + 1.0
        for token in query_tokens:
            entry = self._postings.get(token)
            if entry is None:
                continue
            positions, counts = entry
            scores[positions] += (
                self._idf[token] * (counts * alpha_plus_1) / (counts + self._denom[positions])
            )

        matched = np.flatnonzero(scores)
        if matched.size == 0:
            return []
        take = min(n, matched.size)
        sub = scores[matched]
        if take < matched.size and matched.size > 64:
            # prune before the exact sort; keep everything tied at the cut
            cutoff = np.partition(sub, matched.size - take)[matched.size - take]
            keep = sub >= cutoff
            matched, sub = matched[keep], sub[keep]
        order = np.lexsort((matched, -sub))
        chosen = matched[order[:take]]
        return [
            RetrievalResult(doc_id=int(self._ids[p]), score=float(scores[p]), rank=rank)
            for rank, p in enumerate(chosen, start=1)
        ]


def build_index(repo: Repository, params: Bm25Params | None = None) -> InvertedIndex:
    return InvertedIndex(repo, params or Bm25Params())


def brute_force_top_n(
    repo: Repository,
    params: Bm25Params,
    query_tokens: Sequence[str],
    n: int,
) -> list[RetrievalResult]:
    """Oracle scorer: every corpus quantity recounted from the records,
    every document scored directly, no posting lists. Same ordering and
    exclusion rules as the index path."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not query_tokens:
        raise EmptyQueryError("query has no tokens")
    if len(repo) == 0:
        raise EmptyRepositoryError("cannot search an empty repository")

    docs = [(rec.id, tokenize(rec.question)) for rec in repo.records]
    n_docs = float(len(docs))
    total = 0
    for _, tokens in docs:
        total += len(tokens)
    avg = total / len(docs)

    df: dict[str, int] = {}
    for _, tokens in docs:
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1

    alpha, beta = params.alpha, params.beta
    alpha_plus_1 = alpha + 1.0
    scored: list[tuple[float, int]] = []
    for doc_id, tokens in docs:
        counts = Counter(tokens)
        dl = float(len(tokens))
        denom_base = alpha * (1.0 - beta + beta * (dl / avg))
        score = 0.0
        for token in query_tokens:
            tf = counts.get(token)
            if not tf:
                continue
            d = df[token]
            idf = math.log(1.0 + (n_docs - d + 0.5) / (d + 0.5))
            tf = float(tf)
            score += idf * (tf * alpha_plus_1) / (tf + denom_base)
        if score > 0.0:
            scored.append((score, doc_id))

    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [
        RetrievalResult(doc_id=doc_id, score=score, rank=rank)
        for rank, (score, doc_id) in enumerate(scored[:n], start=1)
    ]
