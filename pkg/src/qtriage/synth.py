"""Seeded synthetic corpus generator for benchmarking and experiments.

Questions are word soups drawn from per-cluster vocabularies mixed with a
shared noise pool; each cluster owns a category label and a handle-time
distribution (location + spread, values rounded to whole abstract units).
Transcripts wrap each question in greeting/diagnosis/closing filler, with
the question planted at a controlled offset from the agent's first
sentence, so tagging experiments know the ground-truth sentence.

Everything is driven by one seeded generator in a fixed call order:
identical seeds give byte-identical corpora. Records are emitted in
cluster round-robin order so any prefix of the record list is a balanced
nested subset (what the repository-size scaling experiment needs).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .errors import ConfigError
from .repository import LabelSchema, QuestionRecord
from .tagger import Sentence, Transcript

SCHEMA = LabelSchema(categorical=("product_service",), continuous=("handle_time",))

# generic service chatter; never carries cluster signal
_FILLER_WORDS = (
    "hello", "hi", "thanks", "thank", "you", "please", "help", "with", "today",
    "sure", "okay", "great", "welcome", "one", "moment", "how", "can", "i",
    "assist", "sorry", "wait", "let", "me", "check", "right", "away", "done",
    "anything", "else", "bye", "good", "day",
)

_CONSONANTS = "bcdfghjklmnprstvz"
_VOWELS = "aeiou"


@dataclass(frozen=True)
class SynthConfig:
    n_clusters: int = 8
    vocab_per_cluster: int = 30
    shared_vocab: int = 40
    docs_per_cluster: int = 400
    queries_per_cluster: int = 10
    question_len: tuple[int, int] = (4, 9)
    filler_len: tuple[int, int] = (2, 6)
    shared_token_rate: float = 0.3  # probability a question token is shared noise
    handle_time_base: float = 10.0
    handle_time_step: float = 6.0
    handle_time_spread: float = 2.0
    max_offset: int = 2  # question lands within +/-max_offset of the agent's first sentence
    seed: int = 1234

    def __post_init__(self):
        positive = (
            "n_clusters", "vocab_per_cluster", "docs_per_cluster",
            "queries_per_cluster", "max_offset",
        )
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.shared_vocab < 0:
            raise ConfigError("shared_vocab must be >= 0")
        for name in ("question_len", "filler_len"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ConfigError(f"{name} must be a (min, max) pair with 1 <= min <= max")
        if not 0.0 <= self.shared_token_rate <= 1.0:
            raise ConfigError("shared_token_rate must be in [0, 1]")
        if self.shared_token_rate > 0 and self.shared_vocab == 0:
            raise ConfigError("shared_token_rate > 0 needs a nonzero shared vocabulary")
        if self.handle_time_spread < 0 or self.handle_time_base < 0:
            raise ConfigError("handle-time parameters must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_clusters": self.n_clusters,
            "vocab_per_cluster": self.vocab_per_cluster,
            "shared_vocab": self.shared_vocab,
            "docs_per_cluster": self.docs_per_cluster,
            "queries_per_cluster": self.queries_per_cluster,
            "question_len": list(self.question_len),
            "filler_len": list(self.filler_len),
            "shared_token_rate": self.shared_token_rate,
            "handle_time_base": self.handle_time_base,
            "handle_time_step": self.handle_time_step,
            "handle_time_spread": self.handle_time_spread,
            "max_offset": self.max_offset,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class GroundTruthQuery:
    text: str
    category: str
    handle_time: float


@dataclass
class SynthData:
    records: list[QuestionRecord]
    transcripts: list[Transcript]
    queries: list[GroundTruthQuery]
    schema: LabelSchema = field(default=SCHEMA)


def _make_word(rng: np.random.Generator, taken: set[str]) -> str:
    while True:
        n_syllables = int(rng.integers(2, 4))
        word = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(n_syllables)
        )
        if word not in taken and word not in _FILLER_WORDS:
            taken.add(word)
            return word


def _build_pools(config: SynthConfig, rng: np.random.Generator):
    taken: set[str] = set()
    clusters = [
        [_make_word(rng, taken) for _ in range(config.vocab_per_cluster)]
        for _ in range(config.n_clusters)
    ]
    shared = [_make_word(rng, taken) for _ in range(config.shared_vocab)]
    categories = [f"svc-{clusters[c][0]}" for c in range(config.n_clusters)]
    return clusters, shared, categories


def _pick(rng: np.random.Generator, pool: list[str]) -> str:
    return pool[rng.integers(len(pool))]


def _question_text(
    rng: np.random.Generator, config: SynthConfig, cluster_pool: list[str], shared: list[str]
) -> str:
    lo, hi = config.question_len
    length = int(rng.integers(lo, hi + 1))
    words = []
    for _ in range(length):
        if shared and rng.random() < config.shared_token_rate:
            words.append(_pick(rng, shared))
        else:
            words.append(_pick(rng, cluster_pool))
    return " ".join(words)


def _filler_text(rng: np.random.Generator, config: SynthConfig) -> str:
    lo, hi = config.filler_len
    length = int(rng.integers(lo, hi + 1))
    return " ".join(_pick(rng, list(_FILLER_WORDS)) for _ in range(length))


def _handle_time(rng: np.random.Generator, config: SynthConfig, cluster: int) -> float:
    loc = config.handle_time_base + cluster * config.handle_time_step
    return float(max(0.0, round(rng.normal(loc, config.handle_time_spread))))


def _build_transcript(
    rng: np.random.Generator,
    config: SynthConfig,
    transcript_id: int,
    question: str,
    category: str,
    handle_time: float,
) -> Transcript:
    offsets = [o for o in range(-config.max_offset, config.max_offset + 1) if o != 0]
    offset = offsets[rng.integers(len(offsets))]
    lead = max(1, -offset) + int(rng.integers(0, 2))
    agent_pos = lead
    question_pos = agent_pos + offset

    sentences: list[Sentence] = []
    for p in range(agent_pos):
        if p == question_pos:
            sentences.append(Sentence("customer", question))
        else:
            sentences.append(Sentence("customer", _filler_text(rng, config)))
    sentences.append(Sentence("agent", _filler_text(rng, config)))
    for p in range(agent_pos + 1, agent_pos + max(0, offset) + 1):
        if p == question_pos:
            sentences.append(Sentence("customer", question))
        else:
            sentences.append(Sentence("agent", _filler_text(rng, config)))
    for j in range(int(rng.integers(2, 5))):
        speaker = "agent" if j % 2 == 0 else "customer"
        sentences.append(Sentence(speaker, _filler_text(rng, config)))

    metadata: dict[str, Any] = {
        "product_service": category,
        "handle_time": handle_time,
        "question_index": question_pos,
    }
    return Transcript(id=transcript_id, sentences=sentences, metadata=metadata)


def generate_records(config: SynthConfig) -> list[QuestionRecord]:
    """Repository records only (the cheap path for large corpora); the
    record stream is identical to the one ``generate`` produces."""
    rng = np.random.default_rng(config.seed)
    clusters, shared, categories = _build_pools(config, rng)
    records: list[QuestionRecord] = []
    for _ in range(config.docs_per_cluster):
        for c in range(config.n_clusters):
            records.append(
                QuestionRecord(
                    id=len(records),
                    question=_question_text(rng, config, clusters[c], shared),
                    categorical={"product_service": categories[c]},
                    continuous={"handle_time": _handle_time(rng, config, c)},
                )
            )
    return records


def generate(config: SynthConfig) -> SynthData:
    """Records, wrapping transcripts, and held-out labelled queries."""
    rng = np.random.default_rng(config.seed)
    clusters, shared, categories = _build_pools(config, rng)

    records: list[QuestionRecord] = []
    record_cluster: list[int] = []
    for _ in range(config.docs_per_cluster):
        for c in range(config.n_clusters):
            records.append(
                QuestionRecord(
                    id=len(records),
                    question=_question_text(rng, config, clusters[c], shared),
                    categorical={"product_service": categories[c]},
                    continuous={"handle_time": _handle_time(rng, config, c)},
                )
            )
            record_cluster.append(c)

    transcripts = [
        _build_transcript(
            rng,
            config,
            rec.id,
            rec.question,
            rec.categorical["product_service"],
            rec.continuous["handle_time"],
        )
        for rec, c in zip(records, record_cluster)
    ]

    queries: list[GroundTruthQuery] = []
    for c in range(config.n_clusters):
        for _ in range(config.queries_per_cluster):
            queries.append(
                GroundTruthQuery(
                    text=_question_text(rng, config, clusters[c], shared),
                    category=categories[c],
                    handle_time=_handle_time(rng, config, c),
                )
            )
    return SynthData(records=records, transcripts=transcripts, queries=queries)


# shipped experiment presets; numbers chosen so the suites run in seconds
# while leaving headroom on their acceptance thresholds

#: disjoint vocabularies: BM25 cluster recovery is perfect by construction
DISJOINT_TASK = SynthConfig(
    n_clusters=4,
    vocab_per_cluster=25,
    shared_vocab=1,
    shared_token_rate=0.0,
    docs_per_cluster=250,
    queries_per_cluster=25,
    seed=7,
)

#: overlapping vocabularies for the nested 3K/6K/9K/12K scaling runs
SCALING_TASK = SynthConfig(
    n_clusters=20,
    vocab_per_cluster=6,
    shared_vocab=50,
    shared_token_rate=0.75,
    docs_per_cluster=600,
    queries_per_cluster=9,
    question_len=(3, 6),
    handle_time_base=8.0,
    handle_time_step=3.0,
    handle_time_spread=3.0,
    seed=42,
)

#: planted-question tagging task for training + rule recovery
TAGGING_TASK = SynthConfig(
    n_clusters=4,
    vocab_per_cluster=12,
    shared_vocab=8,
    shared_token_rate=0.2,
    docs_per_cluster=110,
    queries_per_cluster=5,
    question_len=(3, 6),
    filler_len=(2, 5),
    seed=2025,
)


def with_seed(config: SynthConfig, seed: int) -> SynthConfig:
    return replace(config, seed=seed)
