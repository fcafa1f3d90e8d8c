import json

import pytest

from qtriage import repository
from qtriage.errors import (
    DuplicateIdError,
    EmptyQuestionError,
    EmptyRepositoryError,
    MalformedRecordError,
    SchemaMismatchError,
    SchemaViolationError,
)
from qtriage.repository import (
    LabelSchema,
    QuestionRecord,
    build_repository,
    compute_stats,
    ingest_transcripts,
    save_skip_report,
)
from qtriage.tagger import Sentence, Transcript
from qtriage.text import tokenize


def _rec(i, question, topic="t", minutes=1.0):
    return QuestionRecord(i, question, {"topic": topic}, {"minutes": minutes})


SCHEMA = LabelSchema(categorical=("topic",), continuous=("minutes",))


class TestBuildRepository:
    def test_uniform_lengths(self):
        repo = build_repository([_rec(i, "a b") for i in range(3)], SCHEMA)
        assert repo.stats.avg_doc_length == 2.0
        assert repo.stats.n_docs == 3

    def test_mixed_lengths_mean(self):
        repo = build_repository(
            [_rec(0, "a"), _rec(1, "a b"), _rec(2, "a b c")], SCHEMA
        )
        assert repo.stats.avg_doc_length == 2.0
        assert repo.stats.doc_lengths == {0: 1, 1: 2, 2: 3}

    def test_empty_is_an_error(self):
        with pytest.raises(EmptyRepositoryError):
            build_repository([], SCHEMA)

    def test_duplicate_id(self):
        with pytest.raises(DuplicateIdError):
            build_repository([_rec(0, "a"), _rec(0, "b")], SCHEMA)

    def test_empty_question(self):
        with pytest.raises(EmptyQuestionError):
            build_repository([_rec(0, "!!!")], SCHEMA)

    def test_missing_label(self):
        bad = QuestionRecord(0, "hello", {}, {"minutes": 1.0})
        with pytest.raises(SchemaViolationError):
            build_repository([bad], SCHEMA)

    def test_negative_continuous_rejected(self):
        with pytest.raises(SchemaViolationError):
            build_repository([_rec(0, "a", minutes=-1.0)], SCHEMA)

    def test_non_finite_continuous_rejected(self):
        with pytest.raises(SchemaViolationError):
            build_repository([_rec(0, "a", minutes=float("nan"))], SCHEMA)

    def test_undeclared_label_rejected(self):
        bad = QuestionRecord(0, "hello", {"topic": "t", "extra": "x"}, {"minutes": 1.0})
        with pytest.raises(SchemaViolationError):
            build_repository([bad], SCHEMA)

    def test_records_ordered_by_id(self):
        repo = build_repository([_rec(2, "c"), _rec(0, "a"), _rec(1, "b")], SCHEMA)
        assert [r.id for r in repo.records] == [0, 1, 2]


class TestStats:
    def test_recomputation_is_noop(self, tiny_repo):
        assert compute_stats(tiny_repo.records) == tiny_repo.stats

    def test_doc_freq_matches_brute_count(self):
        import numpy as np

        rng = np.random.default_rng(3)
        vocab = [f"w{i}" for i in range(20)]
        records = [
            _rec(i, " ".join(vocab[j] for j in rng.integers(0, 20, size=rng.integers(1, 8))))
            for i in range(60)
        ]
        repo = build_repository(records, SCHEMA)
        token_sets = {r.id: set(tokenize(r.question)) for r in records}
        for token in vocab:
            expected = sum(1 for s in token_sets.values() if token in s)
            assert repo.stats.doc_freq.get(token, 0) == expected

    def test_avg_consistency(self, tiny_repo):
        s = tiny_repo.stats
        assert abs(s.avg_doc_length - sum(s.doc_lengths.values()) / s.n_docs) < 1e-12
        assert all(1 <= d <= s.n_docs for d in s.doc_freq.values())


class TestPersistence:
    def test_round_trip_identity(self, tiny_repo, tmp_path):
        path = tmp_path / "repo.jsonl"
        repository.save(tiny_repo, path)
        assert repository.load(path) == tiny_repo

    def test_round_trip_random(self, tmp_path):
        import numpy as np

        rng = np.random.default_rng(5)
        for trial in range(20):
            records = [
                _rec(
                    i,
                    " ".join(f"w{j}" for j in rng.integers(0, 50, size=rng.integers(1, 10))),
                    topic=f"t{rng.integers(0, 4)}",
                    minutes=float(rng.integers(0, 100)),
                )
                for i in range(int(rng.integers(1, 40)))
            ]
            repo = build_repository(records, SCHEMA)
            path = tmp_path / f"r{trial}.jsonl"
            repository.save(repo, path)
            assert repository.load(path) == repo

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = json.dumps({"id": 0, "question": "a", "categorical": {}, "continuous": {}})
        path.write_text(good + "\n{ not json\n", encoding="utf-8")
        with pytest.raises(MalformedRecordError) as err:
            repository.load_records(path)
        assert err.value.line_number == 2

    def test_missing_field_is_malformed(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"id": 0}) + "\n", encoding="utf-8")
        with pytest.raises(MalformedRecordError):
            repository.load_records(path)

    def test_schema_mismatch_across_lines(self, tmp_path):
        path = tmp_path / "mixed.jsonl"
        lines = [
            {"id": 0, "question": "a", "categorical": {"topic": "x"}, "continuous": {}},
            {"id": 1, "question": "b", "categorical": {"other": "y"}, "continuous": {}},
        ]
        path.write_text("".join(json.dumps(l) + "\n" for l in lines), encoding="utf-8")
        with pytest.raises(SchemaMismatchError):
            repository.load(path)

    def test_load_against_declared_schema(self, tiny_repo, tmp_path):
        path = tmp_path / "repo.jsonl"
        repository.save(tiny_repo, path)
        other = LabelSchema(categorical=("different",))
        with pytest.raises(SchemaMismatchError):
            repository.load(path, schema=other)


def _transcript(tid, sentences, metadata=None):
    return Transcript(id=tid, sentences=sentences, metadata=metadata or {})


class TestIngest:
    def _meta(self, topic="billing", minutes=4.0):
        return {"topic": topic, "minutes": minutes}

    def test_question_and_labels_copied(self):
        t = _transcript(
            "c1",
            [
                Sentence("customer", "my package never arrived"),
                Sentence("agent", "let me check"),
            ],
            self._meta(topic="Delivery", minutes=7),
        )
        records, skips = ingest_transcripts([t], lambda tr: 0, SCHEMA)
        assert not skips
        assert records[0].question == "my package never arrived"
        assert records[0].categorical["topic"] == "Delivery"
        assert records[0].continuous["minutes"] == 7.0

    def test_agent_only_transcript_skipped(self):
        t = _transcript("c2", [Sentence("agent", "hello")], self._meta())
        records, skips = ingest_transcripts([t], lambda tr: 0, SCHEMA)
        assert records == []
        assert [(s.transcript_id, s.reason) for s in skips] == [("c2", "no_customer_sentence")]

    def test_customer_only_transcript_skipped(self):
        t = _transcript("c3", [Sentence("customer", "hi")], self._meta())
        _, skips = ingest_transcripts([t], lambda tr: 0, SCHEMA)
        assert skips[0].reason == "no_agent_sentence"

    def test_missing_label_skipped(self):
        t = _transcript(
            "c4",
            [Sentence("customer", "where is it"), Sentence("agent", "checking")],
            {"topic": "Delivery"},
        )
        _, skips = ingest_transcripts([t], lambda tr: 0, SCHEMA)
        assert skips[0].reason == "missing_label:minutes"

    def test_ids_dense_in_input_order(self):
        ts = [
            _transcript(
                f"c{i}",
                [Sentence("customer", f"question {i}"), Sentence("agent", "ok")],
                self._meta(),
            )
            for i in range(5)
        ]
        records, _ = ingest_transcripts(ts, lambda tr: 0, SCHEMA)
        assert [r.id for r in records] == [0, 1, 2, 3, 4]

    def test_custom_extractor(self):
        t = _transcript(
            "c5",
            [Sentence("customer", "broken screen"), Sentence("agent", "sorry")],
            {"minutes": 2.0},
        )
        records, _ = ingest_transcripts(
            [t], lambda tr: 0, SCHEMA, label_extractors={"topic": lambda tr: "Hardware"}
        )
        assert records[0].categorical["topic"] == "Hardware"

    def test_skip_report_file(self, tmp_path):
        t = _transcript("c6", [Sentence("agent", "hello")], self._meta())
        _, skips = ingest_transcripts([t], lambda tr: 0, SCHEMA)
        path = tmp_path / "skips.jsonl"
        save_skip_report(skips, path)
        lines = [json.loads(l) for l in path.read_text().splitlines()]
        assert lines == [{"transcript_id": "c6", "reason": "no_customer_sentence"}]
