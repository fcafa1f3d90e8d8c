"""Training-free label prediction from retrieved neighbors.

Stage 2 of the pipeline: look up the query's top-k most similar
repository questions, then aggregate their labels — a normalized
frequency distribution for categorical labels, the exact sample median
for continuous ones. Equivalent to a k-nearest-neighbor vote with BM25
similarity as the distance, which is exactly how the evaluation harness
cross-checks it.

With fewer than k nonzero-score matches the aggregation runs over what
was retrieved and ``support`` records the truth; zero matches raise
NoMatchError and the caller decides the fallback (the CLI offers
``--fallback majority`` for the corpus-wide mode/median).
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import NamedTuple

from .errors import NoMatchError, UnknownLabelError
from .repository import Repository
from .retrieval import InvertedIndex
from .text import tokenize

DEFAULT_K = 100


class CategoryShare(NamedTuple):
    category: str
    count: int
    probability: float


@dataclass
class CategoricalPrediction:
    label_name: str
    ranked: list[CategoryShare]  # descending count, then summed score, then name
    support: int

    def to_dict(self) -> dict:
        return {
            "label": self.label_name,
            "support": self.support,
            "ranked": [
                {"category": s.category, "count": s.count, "probability": s.probability}
                for s in self.ranked
            ],
        }


@dataclass
class ContinuousPrediction:
    label_name: str
    median: float
    samples: list[float]  # neighbor values in retrieval rank order
    support: int

    def to_dict(self) -> dict:
        return {
            "label": self.label_name,
            "support": self.support,
            "median": self.median,
            "samples": self.samples,
        }


def exact_median(values: list[float]) -> float:
    """Sample median: middle order statistic, or the mean of the two
    middle ones when the count is even."""
    if not values:
        raise ValueError("median of empty sample")
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2 == 1:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def _rank_categories(
    counts: Counter, score_sums: dict[str, float], support: int
) -> list[CategoryShare]:
    ordered = sorted(counts, key=lambda cat: (-counts[cat], -score_sums[cat], cat))
    return [CategoryShare(cat, counts[cat], counts[cat] / support) for cat in ordered]


def predict_categorical(
    index: InvertedIndex,
    repo: Repository,
    query: str,
    label_name: str,
    k: int = DEFAULT_K,
) -> CategoricalPrediction:
    """Full ranked distribution over the top-k neighbors' categories.

    Ties in count are broken by the neighbors' summed similarity score,
    then lexicographically. The top-1 prediction is ``ranked[0].category``.
    """
    if label_name not in repo.schema.categorical:
        raise UnknownLabelError(label_name)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    neighbors = index.top_n(tokenize(query), k)
    if not neighbors:
        raise NoMatchError(f"no repository question matches {query!r}")
    counts: Counter = Counter()
    score_sums: dict[str, float] = defaultdict(float)
    for result in neighbors:
        category = repo.record(result.doc_id).categorical[label_name]
        counts[category] += 1
        score_sums[category] += result.score
    support = len(neighbors)
    return CategoricalPrediction(
        label_name=label_name,
        ranked=_rank_categories(counts, score_sums, support),
        support=support,
    )


def predict_continuous(
    index: InvertedIndex,
    repo: Repository,
    query: str,
    label_name: str,
    k: int = DEFAULT_K,
) -> ContinuousPrediction:
    """Median of the top-k neighbors' values; samples kept for display."""
    if label_name not in repo.schema.continuous:
        raise UnknownLabelError(label_name)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    neighbors = index.top_n(tokenize(query), k)
    if not neighbors:
        raise NoMatchError(f"no repository question matches {query!r}")
    samples = [repo.record(r.doc_id).continuous[label_name] for r in neighbors]
    return ContinuousPrediction(
        label_name=label_name,
        median=exact_median(samples),
        samples=samples,
        support=len(samples),
    )


def top_n_categories(pred: CategoricalPrediction, n: int) -> list[str]:
    """First n categories of the ranked distribution (fewer if the
    distribution is smaller)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [share.category for share in pred.ranked[:n]]


# --- corpus-wide fallbacks (--fallback majority) -------------------------


def corpus_categorical(repo: Repository, label_name: str) -> CategoricalPrediction:
    """Distribution over the whole repository; the NoMatch fallback."""
    if label_name not in repo.schema.categorical:
        raise UnknownLabelError(label_name)
    counts: Counter = Counter(rec.categorical[label_name] for rec in repo.records)
    zeros: dict[str, float] = defaultdict(float)
    support = len(repo)
    return CategoricalPrediction(
        label_name=label_name,
        ranked=_rank_categories(counts, zeros, support),
        support=support,
    )


def corpus_continuous(repo: Repository, label_name: str) -> ContinuousPrediction:
    if label_name not in repo.schema.continuous:
        raise UnknownLabelError(label_name)
    samples = [rec.continuous[label_name] for rec in repo.records]
    return ContinuousPrediction(
        label_name=label_name,
        median=exact_median(samples),
        samples=samples,
        support=len(samples),
    )
