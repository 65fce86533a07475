"""Short-answer verification and Wikipedia-title normalization."""

from __future__ import annotations

import enum
import logging
import re
from typing import Optional

from hopqa.backends.clients import WikiClient
from hopqa.classify.features import AUXILIARIES, WH_WORDS
from hopqa.errors import HopQAError, UnverifiableAnswer
from hopqa.text import content_terms, nfc

log = logging.getLogger(__name__)

QUOTES = "\"'`“”‘’«»"
TRAILING_PUNCT = ".!?;:,"
_ARTICLE = re.compile(r"^(?:a|an|the)\s+", re.IGNORECASE)


class AnswerKind(str, enum.Enum):
    YES_NO = "yes_no"
    ENTITY = "entity"
    NUMERIC = "numeric"
    UNKNOWN = "unknown"


def infer_answer_kind(sub_question: str) -> AnswerKind:
    words = [w.strip(".,;:!?\"'").lower() for w in sub_question.split()]
    if not words:
        return AnswerKind.UNKNOWN
    if words[0] in AUXILIARIES:
        return AnswerKind.YES_NO
    if words[0] == "how" and len(words) > 1 and words[1] in ("many", "much"):
        return AnswerKind.NUMERIC
    if words[0] in WH_WORDS or (len(words) > 1 and words[1] in WH_WORDS):
        return AnswerKind.ENTITY
    return AnswerKind.UNKNOWN


def _one_pass(text: str, kind: AnswerKind) -> str:
    text = nfc(text).strip().strip(QUOTES).strip()
    text = text.rstrip(TRAILING_PUNCT).rstrip()
    text = " ".join(text.split())
    if kind is AnswerKind.ENTITY:
        stripped = _ARTICLE.sub("", text, count=1)
        if stripped:
            text = stripped
    return text


def apply_format_rules(short: str, kind: AnswerKind = AnswerKind.UNKNOWN) -> str:
    """Clean a short answer; yes/no answers become exactly "Yes" or "No".

    Cleaning is repeated to a fixed point, so applying the rules twice is the
    same as applying them once.
    """
    text = short
    while True:
        cleaned = _one_pass(text, kind)
        if cleaned == text:
            break
        text = cleaned
    if kind is AnswerKind.YES_NO:
        lead = text.split()[0].strip(TRAILING_PUNCT + QUOTES).lower() if text else ""
        if lead == "yes":
            return "Yes"
        if lead == "no":
            return "No"
        raise UnverifiableAnswer(f"expected a yes/no answer, got {short!r}")
    return text


def wikipedia_normalize(client: WikiClient, short: str, guard: bool = True) -> str:
    """Replace ``short`` by the title of its top Wikipedia search hit.

    With ``guard`` on, the title must share a content word with ``short``.
    Any client failure leaves ``short`` unchanged.
    """
    if not short.strip():
        return short
    try:
        title = client.top_title(short)
    except HopQAError as exc:
        log.warning("title lookup for %r failed: %s", short, exc)
        return short
    if not title:
        return short
    if guard and not (content_terms(short) & content_terms(title)):
        return short
    return title


def normalize(
    client: Optional[WikiClient],
    short: str,
    kind: AnswerKind = AnswerKind.UNKNOWN,
    guard: bool = True,
) -> str:
    text = apply_format_rules(short, kind)
    if client is not None and kind in (AnswerKind.ENTITY, AnswerKind.UNKNOWN):
        text = apply_format_rules(wikipedia_normalize(client, text, guard), kind)
    return text
