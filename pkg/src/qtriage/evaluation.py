"""Evaluation metrics, the KNN cross-check, and the scaling experiment.

Metrics mirror the standard customer-service dashboard: top-n accuracy
for the categorical task and the percentage of cases whose absolute
error stays strictly below a unit threshold for the continuous task.
Both are monotone in their argument by construction.

``knn_oracle_check`` re-implements the whole prediction path naively
(brute-force similarity, its own vote and median code) and demands
prediction-for-prediction equality with the predictor module; any
divergence is a bug in one of the two routes.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from collections.abc import Sequence

from .errors import ConfigError, EmptyQueryError, NoMatchError
from .predictor import (
    CategoricalPrediction,
    predict_categorical,
    predict_continuous,
    top_n_categories,
)
from .repository import Repository, build_repository
from .retrieval import Bm25Params, brute_force_top_n, build_index
from .synth import GroundTruthQuery, SynthConfig, generate
from .text import tokenize

TOP_N_LEVELS = (1, 5, 10, 15)
ERROR_THRESHOLDS = (3, 5, 7)


def top_n_accuracy(
    predictions: Sequence[CategoricalPrediction], truths: Sequence[str], n: int
) -> float:
    """Percentage of cases whose truth appears among the n highest-ranked
    predicted categories."""
    if len(predictions) != len(truths):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, {len(truths)} truths")
    if not predictions:
        raise ValueError("no predictions to score")
    hits = sum(1 for pred, truth in zip(predictions, truths) if truth in top_n_categories(pred, n))
    return 100.0 * hits / len(predictions)


def within_abs_error(
    predicted: Sequence[float], truths: Sequence[float], threshold: float
) -> float:
    """Percentage of cases with |pred - truth| strictly below the
    threshold (errors exactly at the threshold are excluded)."""
    if len(predicted) != len(truths):
        raise ValueError(f"length mismatch: {len(predicted)} predictions, {len(truths)} truths")
    if not predicted:
        raise ValueError("no predictions to score")
    hits = sum(1 for p, t in zip(predicted, truths) if abs(p - t) < threshold)
    return 100.0 * hits / len(predicted)


# --- independent KNN cross-check ------------------------------------------


@dataclass
class KnnCheckReport:
    passed: bool
    n_queries: int
    k: int
    divergences: list[dict] = field(default_factory=list)


def _naive_vote(labels: list[str], scores: list[float]) -> list[tuple[str, int, float]]:
    # independent majority vote: count desc, then summed similarity desc,
    # then category name; probabilities are plain count shares
    counts: Counter = Counter(labels)
    sums: dict[str, float] = defaultdict(float)
    for label, score in zip(labels, scores):
        sums[label] += score
    ranked = sorted(counts, key=lambda cat: (-counts[cat], -sums[cat], cat))
    return [(cat, counts[cat], counts[cat] / len(labels)) for cat in ranked]


def knn_oracle_check(
    repo: Repository,
    queries: Sequence[str],
    k: int,
    params: Bm25Params | None = None,
) -> KnnCheckReport:
    """Naive KNN (brute-force similarity, own vote/median code) versus the
    predictor, compared prediction-for-prediction on every schema label."""
    params = params or Bm25Params()
    index = build_index(repo, params)
    divergences: list[dict] = []

    for query in queries:
        tokens = tokenize(query)
        try:
            neighbors = brute_force_top_n(repo, params, tokens, k) if tokens else []
        except EmptyQueryError:
            neighbors = []

        for label in repo.schema.categorical:
            expected = None
            if neighbors:
                labels = [repo.record(r.doc_id).categorical[label] for r in neighbors]
                expected = _naive_vote(labels, [r.score for r in neighbors])
            try:
                pred = predict_categorical(index, repo, query, label, k)
                got = [(s.category, s.count, s.probability) for s in pred.ranked]
            except (NoMatchError, EmptyQueryError):
                got = None
            if got != expected:
                divergences.append(
                    {"query": query, "label": label, "got": got, "expected": expected}
                )

        for label in repo.schema.continuous:
            expected_median = None
            if neighbors:
                values = [repo.record(r.doc_id).continuous[label] for r in neighbors]
                expected_median = float(statistics.median(values))
            try:
                got_median = predict_continuous(index, repo, query, label, k).median
            except (NoMatchError, EmptyQueryError):
                got_median = None
            if got_median != expected_median:
                divergences.append(
                    {"query": query, "label": label, "got": got_median, "expected": expected_median}
                )

    return KnnCheckReport(
        passed=not divergences, n_queries=len(queries), k=k, divergences=divergences
    )


# --- scaling experiment ----------------------------------------------------


@dataclass
class EvalReport:
    size: int
    k: int
    n_queries: int
    n_matched: int
    top_n_accuracy: dict[int, float]
    within_err: dict[int, float]
    support: dict[str, float]
    config: dict

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "k": self.k,
            "n_queries": self.n_queries,
            "n_matched": self.n_matched,
            "top_n_accuracy": {str(n): v for n, v in self.top_n_accuracy.items()},
            "within_err": {str(t): v for t, v in self.within_err.items()},
            "support": self.support,
            "config": self.config,
        }


def evaluate_repository(
    repo: Repository,
    queries: Sequence[GroundTruthQuery],
    k: int,
    params: Bm25Params | None = None,
    size: int | None = None,
    config_echo: dict | None = None,
) -> EvalReport:
    """Score one repository against labelled queries.

    Queries with zero nonzero-score neighbors count as misses on every
    metric (empty distribution, infinite error); n_matched records how
    many actually retrieved something.
    """
    if not queries:
        raise ValueError("no queries to evaluate")
    index = build_index(repo, params or Bm25Params())
    cat_label = repo.schema.categorical[0]
    cont_label = repo.schema.continuous[0]

    cat_preds: list[CategoricalPrediction] = []
    medians: list[float] = []
    cat_truths: list[str] = []
    time_truths: list[float] = []
    supports: list[int] = []
    for query in queries:
        cat_truths.append(query.category)
        time_truths.append(query.handle_time)
        try:
            pred = predict_categorical(index, repo, query.text, cat_label, k)
            median = predict_continuous(index, repo, query.text, cont_label, k).median
        except (NoMatchError, EmptyQueryError):
            pred = CategoricalPrediction(label_name=cat_label, ranked=[], support=0)
            median = math.inf
        else:
            supports.append(pred.support)
        cat_preds.append(pred)
        medians.append(median)

    return EvalReport(
        size=size if size is not None else len(repo),
        k=k,
        n_queries=len(queries),
        n_matched=len(supports),
        top_n_accuracy={n: top_n_accuracy(cat_preds, cat_truths, n) for n in TOP_N_LEVELS},
        within_err={t: within_abs_error(medians, time_truths, t) for t in ERROR_THRESHOLDS},
        support={
            "min": float(min(supports)) if supports else 0.0,
            "mean": sum(supports) / len(supports) if supports else 0.0,
            "max": float(max(supports)) if supports else 0.0,
        },
        config=config_echo or {},
    )


def scaling_experiment(
    config: SynthConfig,
    sizes: Sequence[int],
    k: int = 100,
    params: Bm25Params | None = None,
) -> list[EvalReport]:
    """Build nested-prefix repositories of the given sizes from one
    synthetic corpus and evaluate each on the same held-out queries."""
    if not sizes:
        raise ConfigError("sizes must be non-empty")
    if list(sizes) != sorted(set(sizes)):
        raise ConfigError("sizes must be strictly ascending")
    if sizes[0] < 1:
        raise ConfigError("sizes must be >= 1")
    total = config.n_clusters * config.docs_per_cluster
    if sizes[-1] > total:
        raise ConfigError(f"largest size {sizes[-1]} exceeds generated corpus ({total} records)")

    data = generate(config)
    echo = config.to_dict()
    reports = []
    for size in sizes:
        repo = build_repository(data.records[:size], data.schema)
        reports.append(
            evaluate_repository(
                repo, data.queries, k, params=params, size=size, config_echo=echo
            )
        )
    return reports
