"""Question features: lexicon counts, structural counts, and a hashed embedding."""

from __future__ import annotations

import math
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from hopqa.text import terms

WH_WORDS = frozenset({"what", "which", "who", "whom", "whose", "where", "when", "why", "how"})
SUBORDINATORS = frozenset(
    {"that", "which", "whose", "where", "when", "after", "before", "caused", "associated", "related"}
)
COMPARATIVES = frozenset({"most", "least", "first", "largest", "smallest", "earliest", "latest"})
AUXILIARIES = frozenset(
    "is are was were be been being am do does did has have had can could may might must "
    "shall should will would".split()
)
CLAUSE_MARKS = ",;:()"

LINGUISTIC_KEYS = ("wh_word_count", "subordinator_count", "comparative_marker_count", "verb_like_count")
STRUCTURAL_KEYS = (
    "token_count",
    "char_count",
    "clause_marker_count",
    "capitalized_span_count",
    "question_word_position_ratio",
)


def _bare(token: str) -> str:
    return token.strip(".,;:!?()[]{}\"'").lower()


def _verb_like(word: str) -> bool:
    if word in AUXILIARIES:
        return True
    return len(word) > 4 and word.endswith(("ed", "ing", "es"))


class Encoder(Protocol):
    dim: int

    def encode(self, text: str) -> np.ndarray: ...


def _bucket(term: str, dim: int) -> int:
    return zlib.crc32(term.encode("utf-8")) % dim


@dataclass(frozen=True)
class HashedTfidfEncoder:
    """TF-IDF weighted hashed bag of words.

    ``idf`` is per bucket; ``None`` means unit weights (an unfitted encoder).
    """

    dim: int = 256
    idf: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.idf is not None and len(self.idf) != self.dim:
            raise ValueError("idf length must equal dim")

    def fit(self, texts: Iterable[str]) -> "HashedTfidfEncoder":
        df = np.zeros(self.dim)
        n = 0
        for text in texts:
            n += 1
            for b in {_bucket(t, self.dim) for t in terms(text)}:
                df[b] += 1
        idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
        return HashedTfidfEncoder(self.dim, tuple(float(v) for v in idf))

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for term, count in Counter(terms(text)).items():
            vec[_bucket(term, self.dim)] += count
        if self.idf is not None:
            vec *= np.asarray(self.idf)
        norm = math.sqrt(float(vec @ vec))
        return vec / norm if norm > 0 else vec


@dataclass(frozen=True)
class FeatureConfig:
    encoder: HashedTfidfEncoder = field(default_factory=HashedTfidfEncoder)

    @property
    def dim(self) -> int:
        return self.encoder.dim

    @property
    def n_features(self) -> int:
        return len(LINGUISTIC_KEYS) + len(STRUCTURAL_KEYS) + self.dim


@dataclass(frozen=True)
class FeatureVector:
    linguistic: dict
    structural: dict
    embedding: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        head = [self.linguistic[k] for k in LINGUISTIC_KEYS] + [self.structural[k] for k in STRUCTURAL_KEYS]
        return np.concatenate([np.asarray(head, dtype=float), np.asarray(self.embedding, dtype=float)])


def _capitalized_spans(tokens: Sequence[str]) -> int:
    spans = 0
    inside = False
    # the first token is capitalized by convention, so it never opens a span
    for i, tok in enumerate(tokens):
        word = tok.strip(".,;:!?()[]{}\"'")
        cap = i > 0 and bool(word) and word[0].isupper()
        if cap and not inside:
            spans += 1
        inside = cap
    return spans


def extract_features(question_text: str, config: FeatureConfig | None = None) -> FeatureVector:
    config = config or FeatureConfig()
    tokens = question_text.split()
    words = [_bare(t) for t in tokens]

    wh_positions = [i for i, w in enumerate(words) if w in WH_WORDS]
    if not tokens:
        ratio = 0.0
    elif not wh_positions:
        ratio = 1.0
    else:
        ratio = wh_positions[0] / max(len(tokens) - 1, 1)

    linguistic = {
        "wh_word_count": sum(w in WH_WORDS for w in words),
        "subordinator_count": sum(w in SUBORDINATORS for w in words),
        "comparative_marker_count": sum(w in COMPARATIVES for w in words),
        "verb_like_count": sum(_verb_like(w) for w in words),
    }
    structural = {
        "token_count": len(tokens),
        "char_count": len(question_text),
        "clause_marker_count": sum(question_text.count(c) for c in CLAUSE_MARKS),
        "capitalized_span_count": _capitalized_spans(tokens),
        "question_word_position_ratio": ratio,
    }
    embedding = tuple(float(v) for v in config.encoder.encode(question_text))
    return FeatureVector(linguistic, structural, embedding)


def feature_matrix(texts: Sequence[str], config: FeatureConfig) -> np.ndarray:
    if not texts:
        return np.zeros((0, config.n_features))
    return np.vstack([extract_features(t, config).as_array() for t in texts])
