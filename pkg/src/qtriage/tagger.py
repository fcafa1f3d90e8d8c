"""Sentence-attention tagging of customer questions in dialogue transcripts.

A transcript is an ordered list of speaker-attributed sentences. Each
sentence is encoded as a vector (here: the mean of its token embeddings,
a deliberately small stand-in for a pretrained sequence model), shifted
by a sinusoidal position embedding keyed to the sentence's offset from
the agent's first sentence, and scored against a learned key vector. The
softmax of those scores is the per-sentence attention weight; their
weighted sum feeds a linear classifier over the transcript's topic.

Tagging then reads the attention weights back out:

* rule 1 picks the customer sentence with the highest weight anywhere;
* rule 2 restricts the argmax to customer sentences within a window of
  the agent's first sentence, falling back to rule 1 when the window
  holds no customer sentence.

Training is plain full-batch gradient descent with analytic gradients;
`gradient_check` verifies them against central finite differences.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np

from .errors import (
    AllMaskedError,
    DegenerateDatasetError,
    EmptyTranscriptError,
    LabelOutOfRangeError,
    MalformedRecordError,
    ModelMismatchError,
    NoAgentSentenceError,
    NoCustomerSentenceError,
)
from .text import tokenize

SPEAKERS = ("customer", "agent")
UNKNOWN_TOKEN = "<unk>"


@dataclass(frozen=True)
class Sentence:
    speaker: str
    text: str

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise ValueError(f"speaker must be one of {SPEAKERS}, got {self.speaker!r}")


@dataclass
class Transcript:
    id: Any
    sentences: list[Sentence]
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TaggerConfig:
    """Shape limits and classifier width.

    n_as caps sentences per transcript, n_st caps tokens per sentence,
    d_model is both the sentence-embedding and position-embedding size
    (768 mirrors a standard pretrained encoder width; training tests use
    16 to stay fast).
    """

    n_as: int = 64
    n_st: int = 128
    d_model: int = 768
    n_classes: int = 2

    def __post_init__(self):
        for name in ("n_as", "n_st", "d_model", "n_classes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d_model % 2 != 0:
            raise ValueError("d_model must be even (sin/cos component pairs)")


@dataclass
class AttentionModel:
    """Toy encoder parameters: token embeddings (including a reserved
    unknown-token row), the attention key, and the linear classifier."""

    embeddings: dict[str, np.ndarray]
    key: np.ndarray
    weights: np.ndarray  # (n_classes, d_model)
    bias: np.ndarray  # (n_classes,)


@dataclass
class TaggedTranscript:
    transcript_id: Any
    sigma: list[float]
    selected_index: int
    rule: int


# --- position indexing and embedding --------------------------------------


def first_agent_position(transcript: Transcript) -> int:
    for i, sentence in enumerate(transcript.sentences):
        if sentence.speaker == "agent":
            return i
    raise NoAgentSentenceError(f"transcript {transcript.id}: no agent sentence")


def position_index(transcript: Transcript, sentence_pos: int, n_as: int) -> int:
    """Offset from the agent's first sentence, shifted by n_as and clamped
    into [0, 2*n_as]; the agent's first sentence itself maps to n_as."""
    if not 0 <= sentence_pos < len(transcript.sentences):
        raise IndexError(f"sentence_pos {sentence_pos} out of range")
    shifted = sentence_pos - first_agent_position(transcript) + n_as
    return min(max(shifted, 0), 2 * n_as)


def position_embedding(i: int, d_pos: int) -> np.ndarray:
    """Sinusoidal embedding: component 2p is sin(i / 10000^(2p/d_pos)),
    component 2p+1 the matching cos."""
    if d_pos <= 0 or d_pos % 2 != 0:
        raise ValueError(f"d_pos must be a positive even number, got {d_pos}")
    if i < 0:
        raise ValueError(f"index must be >= 0, got {i}")
    pairs = np.arange(d_pos // 2, dtype=np.float64)
    angles = i / np.power(10000.0, 2.0 * pairs / d_pos)
    out = np.empty(d_pos, dtype=np.float64)
    out[0::2] = np.sin(angles)
    out[1::2] = np.cos(angles)
    return out


@lru_cache(maxsize=32)
def _position_table(n_as: int, d_model: int) -> np.ndarray:
    table = np.stack([position_embedding(i, d_model) for i in range(2 * n_as + 1)])
    table.flags.writeable = False
    return table


# --- attention -------------------------------------------------------------


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / e.sum()


def attention(
    Q: np.ndarray, key: np.ndarray, mask: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled dot-product attention with a vector key.

    Row logits are (Q_i . key) / sqrt(d); masked rows get -inf before the
    softmax and therefore exactly zero weight. Returns (sigma, chi) where
    sigma is the weight simplex and chi = sum_i sigma_i Q_i (values are
    the rows of Q themselves).
    """
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] < 1:
        raise ValueError(f"Q must be a non-empty 2-D array, got shape {Q.shape}")
    logits = (Q @ np.asarray(key, dtype=np.float64)) / math.sqrt(Q.shape[1])
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise AllMaskedError("attention requires at least one unmasked row")
        logits = np.where(mask, logits, -np.inf)
    sigma = _softmax(logits)
    chi = sigma @ Q
    return sigma, chi


# --- toy encoder and forward pass ------------------------------------------


@lru_cache(maxsize=131072)
def _sentence_tokens(text: str, n_st: int) -> tuple[str, ...]:
    return tuple(tokenize(text)[:n_st])


def _resolve_tokens(model: AttentionModel, tokens: tuple[str, ...]) -> list[str]:
    # empty sentences fall back to the unknown embedding so every row is defined
    if not tokens:
        return [UNKNOWN_TOKEN]
    return [t if t in model.embeddings else UNKNOWN_TOKEN for t in tokens]


def _encode(
    transcript: Transcript,
    model: AttentionModel,
    config: TaggerConfig,
    use_positions: bool,
) -> tuple[np.ndarray, list[list[str]]]:
    """Sentence embeddings Q (mean token embedding + position embedding)
    and the per-sentence resolved token lists the gradients need."""
    sentences = transcript.sentences[: config.n_as]
    table = _position_table(config.n_as, config.d_model) if use_positions else None
    rows = np.empty((len(sentences), config.d_model), dtype=np.float64)
    resolved: list[list[str]] = []
    for i, sentence in enumerate(sentences):
        names = _resolve_tokens(model, _sentence_tokens(sentence.text, config.n_st))
        resolved.append(names)
        acc = np.zeros(config.d_model, dtype=np.float64)
        for name in names:
            acc += model.embeddings[name]
        rows[i] = acc / len(names)
        if table is not None:
            rows[i] += table[position_index(transcript, i, config.n_as)]
    return rows, resolved


def forward(
    transcript: Transcript,
    model: AttentionModel,
    config: TaggerConfig,
    use_positions: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Class probabilities and per-sentence attention weights.

    Sentences beyond n_as and tokens beyond n_st are truncated; unknown
    tokens use the reserved unknown embedding. ``use_positions=False``
    zeroes out the position information (the ablation configuration).
    """
    if not transcript.sentences:
        raise EmptyTranscriptError(f"transcript {transcript.id} has no sentences")
    Q, _ = _encode(transcript, model, config, use_positions)
    sigma, chi = attention(Q, model.key)
    probs = _softmax(model.weights @ chi + model.bias)
    return probs, sigma


# --- tagging rules ----------------------------------------------------------


def _argmax_earliest(sigma: np.ndarray, candidates: list[int]) -> int:
    best = candidates[0]
    for i in candidates[1:]:
        if sigma[i] > sigma[best]:
            best = i
    return best


def tag_rule1(transcript: Transcript, sigma: np.ndarray) -> int:
    """Customer sentence with the highest attention weight anywhere;
    exact ties resolve to the earliest position."""
    candidates = [
        i
        for i in range(min(len(sigma), len(transcript.sentences)))
        if transcript.sentences[i].speaker == "customer"
    ]
    if not candidates:
        raise NoCustomerSentenceError(f"transcript {transcript.id}: no customer sentence")
    return _argmax_earliest(np.asarray(sigma), candidates)


def tag_rule2(
    transcript: Transcript,
    sigma: np.ndarray,
    window: float = 2,
    n_as: int = 64,
) -> int:
    """Highest-weight customer sentence within +/-window of the agent's
    first sentence (measured on the shifted position index); falls back
    to rule 1 when the window holds no customer sentence."""
    sigma = np.asarray(sigma)
    center = n_as  # shifted index of the agent's first sentence
    candidates = [
        i
        for i in range(min(len(sigma), len(transcript.sentences)))
        if transcript.sentences[i].speaker == "customer"
        and abs(position_index(transcript, i, n_as) - center) <= window
    ]
    if not candidates:
        return tag_rule1(transcript, sigma)
    return _argmax_earliest(sigma, candidates)


def tag_transcript(
    transcript: Transcript,
    model: AttentionModel,
    config: TaggerConfig,
    rule: int = 2,
    window: float = 2,
) -> TaggedTranscript:
    """Run the forward pass and apply the requested tagging rule."""
    if rule not in (1, 2):
        raise ValueError(f"rule must be 1 or 2, got {rule}")
    _, sigma = forward(transcript, model, config)
    if rule == 1:
        selected = tag_rule1(transcript, sigma)
    else:
        selected = tag_rule2(transcript, sigma, window=window, n_as=config.n_as)
    return TaggedTranscript(
        transcript_id=transcript.id,
        sigma=[float(s) for s in sigma],
        selected_index=selected,
        rule=rule,
    )


# --- training ---------------------------------------------------------------


@dataclass
class Gradients:
    embeddings: dict[str, np.ndarray]  # touched tokens only
    key: np.ndarray
    weights: np.ndarray
    bias: np.ndarray


def batch_loss(
    model: AttentionModel,
    batch: Sequence[tuple[Transcript, int]],
    config: TaggerConfig,
    use_positions: bool = True,
) -> float:
    """Mean cross-entropy of the classifier over (transcript, class) pairs."""
    if not batch:
        raise ValueError("batch must be non-empty")
    total = 0.0
    for transcript, label in batch:
        if not 0 <= label < config.n_classes:
            raise LabelOutOfRangeError(label, config.n_classes)
        Q, _ = _encode(transcript, model, config, use_positions)
        _, chi = attention(Q, model.key)
        z = model.weights @ chi + model.bias
        zmax = float(np.max(z))
        total += zmax + math.log(np.exp(z - zmax).sum()) - float(z[label])
    return total / len(batch)


def loss_and_gradients(
    model: AttentionModel,
    batch: Sequence[tuple[Transcript, int]],
    config: TaggerConfig,
    use_positions: bool = True,
) -> tuple[float, Gradients]:
    """Mean cross-entropy plus analytic gradients for every parameter.

    Embedding gradients cover only tokens that occur in the batch; an
    untouched token's gradient is exactly zero and is simply absent from
    the returned mapping.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    d = config.d_model
    scale = math.sqrt(d)
    g_key = np.zeros_like(model.key)
    g_weights = np.zeros_like(model.weights)
    g_bias = np.zeros_like(model.bias)
    g_emb: dict[str, np.ndarray] = {}
    total = 0.0

    for transcript, label in batch:
        if not 0 <= label < config.n_classes:
            raise LabelOutOfRangeError(label, config.n_classes)
        Q, resolved = _encode(transcript, model, config, use_positions)
        sigma, chi = attention(Q, model.key)
        z = model.weights @ chi + model.bias
        zmax = float(np.max(z))
        exp_z = np.exp(z - zmax)
        p = exp_z / exp_z.sum()
        total += zmax + math.log(exp_z.sum()) - float(z[label])

        dz = p.copy()
        dz[label] -= 1.0
        g_weights += np.outer(dz, chi)
        g_bias += dz
        dchi = model.weights.T @ dz

        # chi = sum_i sigma_i Q_i with sigma = softmax(Q K / sqrt(d))
        g_sigma = Q @ dchi
        dlogit = sigma * (g_sigma - float(sigma @ g_sigma))
        dQ = np.outer(sigma, dchi) + np.outer(dlogit, model.key) / scale
        g_key += (dlogit @ Q) / scale

        for i, names in enumerate(resolved):
            share = dQ[i] / len(names)
            for name in names:
                bucket = g_emb.get(name)
                if bucket is None:
                    bucket = g_emb[name] = np.zeros(d, dtype=np.float64)
                bucket += share

    b = float(len(batch))
    for bucket in g_emb.values():
        bucket /= b
    return total / b, Gradients(
        embeddings=g_emb, key=g_key / b, weights=g_weights / b, bias=g_bias / b
    )


def init_model(
    dataset: Sequence[tuple[Transcript, int]],
    config: TaggerConfig,
    seed: int = 0,
) -> AttentionModel:
    """Seeded random initialization over the dataset's vocabulary (plus
    the reserved unknown token). Identical seeds give identical models."""
    vocab = sorted(
        {
            token
            for transcript, _ in dataset
            for sentence in transcript.sentences[: config.n_as]
            for token in _sentence_tokens(sentence.text, config.n_st)
        }
    )
    rng = np.random.default_rng(seed)
    rows = rng.normal(0.0, 0.1, size=(len(vocab) + 1, config.d_model))
    embeddings = {UNKNOWN_TOKEN: rows[0]}
    for i, token in enumerate(vocab, start=1):
        embeddings[token] = rows[i]
    return AttentionModel(
        embeddings=embeddings,
        key=rng.normal(0.0, 0.1, size=config.d_model),
        weights=rng.normal(0.0, 0.1, size=(config.n_classes, config.d_model)),
        bias=np.zeros(config.n_classes, dtype=np.float64),
    )


def train(
    dataset: Sequence[tuple[Transcript, int]],
    config: TaggerConfig,
    lr: float = 0.5,
    epochs: int = 200,
    seed: int = 0,
) -> AttentionModel:
    """Full-batch gradient descent, deterministic under a fixed seed."""
    labels = {label for _, label in dataset}
    if len(labels) < 2:
        raise DegenerateDatasetError("training needs at least two distinct classes")
    model = init_model(dataset, config, seed)
    for _ in range(epochs):
        _, grads = loss_and_gradients(model, dataset, config)
        model.key -= lr * grads.key
        model.weights -= lr * grads.weights
        model.bias -= lr * grads.bias
        for token, g in grads.embeddings.items():
            model.embeddings[token] -= lr * g
    return model


def make_gradcheck_instance(
    rng: np.random.Generator,
    d_model: int = 4,
    n_classes: int = 3,
    n_transcripts: int = 2,
) -> tuple[AttentionModel, list[tuple[Transcript, int]], TaggerConfig]:
    """Random tiny model and batch for finite-difference verification."""
    config = TaggerConfig(n_as=6, n_st=4, d_model=d_model, n_classes=n_classes)
    vocab = [f"w{i}" for i in range(int(rng.integers(6, 12)))]
    embeddings = {UNKNOWN_TOKEN: rng.normal(0.0, 1.0, d_model)}
    for token in vocab:
        embeddings[token] = rng.normal(0.0, 1.0, d_model)
    model = AttentionModel(
        embeddings=embeddings,
        key=rng.normal(0.0, 1.0, d_model),
        weights=rng.normal(0.0, 1.0, (n_classes, d_model)),
        bias=rng.normal(0.0, 1.0, n_classes),
    )
    batch = []
    for t in range(n_transcripts):
        n_sentences = int(rng.integers(2, 5))
        agent_at = int(rng.integers(0, n_sentences))
        sentences = []
        for i in range(n_sentences):
            words = [vocab[rng.integers(len(vocab))] for _ in range(int(rng.integers(1, 5)))]
            if rng.random() < 0.15:
                words.append("nevertrained")  # exercises the unknown embedding
            speaker = "agent" if i == agent_at else "customer"
            sentences.append(Sentence(speaker, " ".join(words)))
        batch.append(
            (Transcript(id=t, sentences=sentences), int(rng.integers(0, n_classes)))
        )
    return model, batch, config


def gradient_check(
    model: AttentionModel,
    batch: Sequence[tuple[Transcript, int]],
    config: TaggerConfig,
    eps: float = 1e-5,
) -> float:
    """Max relative disagreement between analytic gradients and central
    finite differences over every parameter component."""
    _, grads = loss_and_gradients(model, batch, config)

    def numeric(param: np.ndarray, idx) -> float:
        original = param[idx]
        param[idx] = original + eps
        up = batch_loss(model, batch, config)
        param[idx] = original - eps
        down = batch_loss(model, batch, config)
        param[idx] = original
        return (up - down) / (2.0 * eps)

    def rel_err(analytic: float, estimate: float) -> float:
        return abs(analytic - estimate) / max(abs(analytic), abs(estimate), 1e-3)

    worst = 0.0
    flat_params = [(model.key, grads.key), (model.bias, grads.bias)]
    for param, grad in flat_params:
        for i in range(param.size):
            worst = max(worst, rel_err(float(grad[i]), numeric(param, i)))
    for i in range(model.weights.shape[0]):
        for j in range(model.weights.shape[1]):
            worst = max(worst, rel_err(float(grads.weights[i, j]), numeric(model.weights, (i, j))))
    zero = np.zeros(config.d_model)
    for token in sorted(model.embeddings):
        analytic = grads.embeddings.get(token, zero)
        param = model.embeddings[token]
        for i in range(param.size):
            worst = max(worst, rel_err(float(analytic[i]), numeric(param, i)))
    return worst


# --- persistence -------------------------------------------------------------


def save_model(model: AttentionModel, config: TaggerConfig, path: str | os.PathLike) -> None:
    """One JSON document holding the config and every parameter; floats
    round-trip exactly."""
    doc = {
        "config": {
            "n_as": config.n_as,
            "n_st": config.n_st,
            "d_model": config.d_model,
            "n_classes": config.n_classes,
        },
        "key": list(model.key),
        "weights": [list(row) for row in model.weights],
        "bias": list(model.bias),
        "embeddings": {token: list(vec) for token, vec in model.embeddings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> tuple[AttentionModel, TaggerConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelMismatchError(f"model file {path} is not valid JSON: {exc}") from exc
    try:
        cfg = doc["config"]
        config = TaggerConfig(
            n_as=int(cfg["n_as"]),
            n_st=int(cfg["n_st"]),
            d_model=int(cfg["d_model"]),
            n_classes=int(cfg["n_classes"]),
        )
        model = AttentionModel(
            embeddings={
                token: np.array(vec, dtype=np.float64)
                for token, vec in doc["embeddings"].items()
            },
            key=np.array(doc["key"], dtype=np.float64),
            weights=np.array(doc["weights"], dtype=np.float64),
            bias=np.array(doc["bias"], dtype=np.float64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelMismatchError(f"model file {path} is malformed: {exc}") from exc
    d = config.d_model
    if model.key.shape != (d,) or model.weights.shape != (config.n_classes, d):
        raise ModelMismatchError("parameter shapes do not match the stored config")
    if model.bias.shape != (config.n_classes,):
        raise ModelMismatchError("bias shape does not match the stored config")
    if UNKNOWN_TOKEN not in model.embeddings:
        raise ModelMismatchError("model lacks the reserved unknown-token embedding")
    for token, vec in model.embeddings.items():
        if vec.shape != (d,):
            raise ModelMismatchError(f"embedding for {token!r} has wrong dimension")
    return model, config


# --- transcript and tag-report files -----------------------------------------


def load_transcripts(path: str | os.PathLike) -> list[Transcript]:
    """JSON Lines: {id, sentences: [{speaker, text}], metadata}."""
    out: list[Transcript] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                sentences = [
                    Sentence(speaker=s["speaker"], text=str(s["text"]))
                    for s in obj["sentences"]
                ]
                out.append(
                    Transcript(id=obj["id"], sentences=sentences, metadata=obj.get("metadata", {}))
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedRecordError(lineno, str(exc)) from exc
    return out


def save_transcripts(transcripts: Sequence[Transcript], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in transcripts:
            fh.write(
                json.dumps(
                    {
                        "id": t.id,
                        "sentences": [{"speaker": s.speaker, "text": s.text} for s in t.sentences],
                        "metadata": t.metadata,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )


def save_tag_report(tagged: Sequence[TaggedTranscript], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tagged:
            fh.write(
                json.dumps(
                    {
                        "transcript_id": t.transcript_id,
                        "selected_index": t.selected_index,
                        "rule": t.rule,
                        "sigma": t.sigma,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
