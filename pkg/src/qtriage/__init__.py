"""qtriage: tag customer questions in transcripts, keep them in a BM25
question repository, and predict labels from retrieved neighbors without
training a per-label model."""

from .predictor import (
    CategoricalPrediction,
    ContinuousPrediction,
    predict_categorical,
    predict_continuous,
    top_n_categories,
)
from .repository import (
    CorpusStats,
    LabelSchema,
    QuestionRecord,
    Repository,
    build_repository,
    ingest_transcripts,
    load,
    save,
)
from .retrieval import (
    Bm25Params,
    InvertedIndex,
    RetrievalResult,
    brute_force_top_n,
    build_index,
)
from .tagger import (
    AttentionModel,
    Sentence,
    TaggedTranscript,
    TaggerConfig,
    Transcript,
    attention,
    forward,
    position_embedding,
    position_index,
    tag_rule1,
    tag_rule2,
    tag_transcript,
    train,
)
from .text import tokenize

__version__ = "0.1.0"

__all__ = [
    "AttentionModel",
    "Bm25Params",
    "CategoricalPrediction",
    "ContinuousPrediction",
    "CorpusStats",
    "InvertedIndex",
    "LabelSchema",
    "QuestionRecord",
    "Repository",
    "RetrievalResult",
    "Sentence",
    "TaggedTranscript",
    "TaggerConfig",
    "Transcript",
    "attention",
    "brute_force_top_n",
    "build_index",
    "build_repository",
    "forward",
    "ingest_transcripts",
    "load",
    "position_embedding",
    "position_index",
    "predict_categorical",
    "predict_continuous",
    "save",
    "tag_rule1",
    "tag_rule2",
    "tag_transcript",
    "tokenize",
    "top_n_categories",
    "train",
]
