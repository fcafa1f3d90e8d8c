"""Question repository: records, corpus statistics, ingest and persistence.

The repository is the stage-1 output store: one row per tagged customer
question, with its categorical and continuous labels. Statistics needed by
the ranking function (document lengths, average length, document
frequencies) are always recomputed from the records — never persisted —
so they cannot go stale.

Persistence is JSON Lines, one record per line, UTF-8, with fields
``id``, ``question``, ``categorical``, ``continuous``. Line orientation
means repositories can be built by streaming and refreshed by appending
and rebuilding.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

from .errors import (
    DuplicateIdError,
    EmptyQuestionError,
    EmptyRepositoryError,
    MalformedRecordError,
    NoAgentSentenceError,
    NoCustomerSentenceError,
    SchemaMismatchError,
    SchemaViolationError,
)
from .text import tokenize


@dataclass(frozen=True)
class LabelSchema:
    """Declared label names, split by kind."""

    categorical: tuple[str, ...] = ()
    continuous: tuple[str, ...] = ()

    def __post_init__(self):
        overlap = set(self.categorical) & set(self.continuous)
        if overlap:
            raise SchemaMismatchError(f"labels declared twice: {sorted(overlap)}")
        if not self.categorical and not self.continuous:
            raise SchemaMismatchError("schema declares no labels")


@dataclass
class QuestionRecord:
    """One repository entry: a question plus its labels."""

    id: int
    question: str
    categorical: dict[str, str] = field(default_factory=dict)
    continuous: dict[str, float] = field(default_factory=dict)


@dataclass
class CorpusStats:
    """Corpus-level inputs to the ranking function."""

    n_docs: int
    doc_lengths: dict[int, int]
    avg_doc_length: float
    doc_freq: dict[str, int]


@dataclass
class Repository:
    """Immutable-after-build store of records, stats and schema."""

    records: list[QuestionRecord]
    stats: CorpusStats
    schema: LabelSchema
    _by_id: dict[int, QuestionRecord] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self._by_id:
            self._by_id = {r.id: r for r in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def record(self, doc_id: int) -> QuestionRecord:
        return self._by_id[doc_id]


def compute_stats(records: Sequence[QuestionRecord]) -> CorpusStats:
    """Single pass over the records; lengths summed in id order."""
    doc_lengths: dict[int, int] = {}
    doc_freq: dict[str, int] = {}
    total = 0
    for rec in records:
        tokens = tokenize(rec.question)
        doc_lengths[rec.id] = len(tokens)
        total += len(tokens)
        for tok in set(tokens):
            doc_freq[tok] = doc_freq.get(tok, 0) + 1
    n = len(records)
    return CorpusStats(
        n_docs=n,
        doc_lengths=doc_lengths,
        avg_doc_length=total / n if n else 0.0,
        doc_freq=doc_freq,
    )


def _validate_record(rec: QuestionRecord, schema: LabelSchema) -> None:
    for name in schema.categorical:
        if name not in rec.categorical:
            raise SchemaViolationError(rec.id, name, "missing categorical value")
        if not isinstance(rec.categorical[name], str):
            raise SchemaViolationError(rec.id, name, "categorical value must be a string")
    for name in schema.continuous:
        if name not in rec.continuous:
            raise SchemaViolationError(rec.id, name, "missing continuous value")
        value = rec.continuous[name]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaViolationError(rec.id, name, "continuous value must be a number")
        if not math.isfinite(value) or value < 0:
            raise SchemaViolationError(rec.id, name, f"value {value!r} not finite and >= 0")
    for name in rec.categorical:
        if name not in schema.categorical:
            raise SchemaViolationError(rec.id, name, "label not declared in schema")
    for name in rec.continuous:
        if name not in schema.continuous:
            raise SchemaViolationError(rec.id, name, "label not declared in schema")


def build_repository(records: Iterable[QuestionRecord], schema: LabelSchema) -> Repository:
    """Validate records against the schema and compute stats.

    Records come out ordered by ascending id. Raises DuplicateIdError,
    SchemaViolationError, EmptyQuestionError, or EmptyRepositoryError.
    """
    ordered = sorted(records, key=lambda r: r.id)
    if not ordered:
        raise EmptyRepositoryError("repository must contain at least one record")
    seen: set[int] = set()
    for rec in ordered:
        if rec.id in seen:
            raise DuplicateIdError(rec.id)
        seen.add(rec.id)
        if not tokenize(rec.question):
            raise EmptyQuestionError(rec.id)
        _validate_record(rec, schema)
    return Repository(records=ordered, stats=compute_stats(ordered), schema=schema)


# --- transcript ingest ---------------------------------------------------


@dataclass
class SkippedTranscript:
    transcript_id: Any
    reason: str


def ingest_transcripts(
    transcripts: Iterable,
    tagger: Callable[[Any], int],
    schema: LabelSchema,
    label_extractors: dict[str, Callable[[Any], Any]] | None = None,
) -> tuple[list[QuestionRecord], list[SkippedTranscript]]:
    """Turn transcripts into records via a tagging function.

    ``tagger`` maps a transcript to the index of its selected customer
    sentence. Labels default to a metadata lookup by label name; pass
    ``label_extractors`` to override per label. Transcripts that cannot be
    ingested are skipped and reported, never silently dropped. Ids are
    dense non-negative integers assigned in input order.
    """
    extractors = label_extractors or {}
    records: list[QuestionRecord] = []
    skips: list[SkippedTranscript] = []

    def extract(transcript, name):
        fn = extractors.get(name)
        if fn is not None:
            return fn(transcript)
        return transcript.metadata.get(name)

    for transcript in transcripts:
        speakers = {s.speaker for s in transcript.sentences}
        if "agent" not in speakers:
            skips.append(SkippedTranscript(transcript.id, "no_agent_sentence"))
            continue
        if "customer" not in speakers:
            skips.append(SkippedTranscript(transcript.id, "no_customer_sentence"))
            continue
        try:
            idx = tagger(transcript)
        except (NoAgentSentenceError, NoCustomerSentenceError) as exc:
            skips.append(SkippedTranscript(transcript.id, type(exc).__name__))
            continue
        question = transcript.sentences[idx].text
        if not tokenize(question):
            skips.append(SkippedTranscript(transcript.id, "empty_question"))
            continue

        categorical: dict[str, str] = {}
        continuous: dict[str, float] = {}
        reason = None
        for name in schema.categorical:
            value = extract(transcript, name)
            if value is None:
                reason = f"missing_label:{name}"
                break
            categorical[name] = str(value)
        if reason is None:
            for name in schema.continuous:
                value = extract(transcript, name)
                if value is None:
                    reason = f"missing_label:{name}"
                    break
                value = float(value)
                if not math.isfinite(value) or value < 0:
                    reason = f"bad_label:{name}"
                    break
                continuous[name] = value
        if reason is not None:
            skips.append(SkippedTranscript(transcript.id, reason))
            continue

        records.append(
            QuestionRecord(
                id=len(records),
                question=question,
                categorical=categorical,
                continuous=continuous,
            )
        )
    return records, skips


def save_skip_report(skips: Sequence[SkippedTranscript], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for skip in skips:
            fh.write(
                json.dumps(
                    {"transcript_id": skip.transcript_id, "reason": skip.reason},
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )


# --- persistence ---------------------------------------------------------


def save(repo: Repository, path: str | os.PathLike) -> None:
    """Write one JSON object per record; stats are never persisted."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in repo.records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "question": rec.question,
                        "categorical": rec.categorical,
                        "continuous": rec.continuous,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_records(path: str | os.PathLike) -> list[QuestionRecord]:
    """Parse a JSON Lines record file; raises MalformedRecordError with the
    offending line number."""
    records: list[QuestionRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(lineno, str(exc)) from exc
            if not isinstance(obj, dict):
                raise MalformedRecordError(lineno, "record is not an object")
            try:
                records.append(
                    QuestionRecord(
                        id=int(obj["id"]),
                        question=str(obj["question"]),
                        categorical={str(k): str(v) for k, v in obj.get("categorical", {}).items()},
                        continuous={str(k): float(v) for k, v in obj.get("continuous", {}).items()},
                    )
                )
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                raise MalformedRecordError(lineno, str(exc)) from exc
    return records


def infer_schema(records: Sequence[QuestionRecord]) -> LabelSchema:
    if not records:
        raise EmptyRepositoryError("cannot infer a schema from zero records")
    first = records[0]
    return LabelSchema(
        categorical=tuple(sorted(first.categorical)),
        continuous=tuple(sorted(first.continuous)),
    )


def load(path: str | os.PathLike, schema: LabelSchema | None = None) -> Repository:
    """Load a repository file; stats are recomputed, never trusted.

    With ``schema`` given, every record must match it; otherwise the schema
    is inferred from the first record and consistency is enforced across
    the file (SchemaMismatchError on divergence).
    """
    records = load_records(path)
    if schema is None:
        schema = infer_schema(records)
    for rec in records:
        if tuple(sorted(rec.categorical)) != tuple(sorted(schema.categorical)) or tuple(
            sorted(rec.continuous)
        ) != tuple(sorted(schema.continuous)):
            raise SchemaMismatchError(
                f"record {rec.id} labels do not match schema "
                f"(categorical {sorted(rec.categorical)}, continuous {sorted(rec.continuous)})"
            )
    return build_repository(records, schema)
