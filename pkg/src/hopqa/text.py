"""Small text primitives used by several modules.

Token counting is whitespace splitting throughout; swap ``count_tokens`` if a
model tokenizer is ever needed.
"""

from __future__ import annotations

import re
import unicodedata

# a sentence ends at . ? or ! followed by whitespace and an uppercase letter
_BOUNDARY = re.compile(r"(?<=[.?!])\s+(?=[A-Z])")
_TERM = re.compile(r"[^\W_]+")

STOPWORDS = frozenset(
    "a an the of and or in on at to for by with from as is are was were be "
    "it its this that which what who whom whose".split()
)


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def count_tokens(text: str) -> int:
    return len(text.split())


def split_sentences(text: str) -> list[str]:
    """Split on line breaks, then on ``[.?!]`` + whitespace + uppercase.

    Abbreviations followed by a lowercase word ("E. coli") stay joined.
    """
    sentences = []
    for line in text.splitlines():
        for piece in _BOUNDARY.split(line):
            piece = piece.strip()
            if piece:
                sentences.append(piece)
    return sentences


def terms(text: str) -> list[str]:
    """Lowercased alphanumeric terms; punctuation and underscores separate."""
    return _TERM.findall(text.lower())


def content_terms(text: str) -> set[str]:
    return {t for t in terms(text) if t not in STOPWORDS}
