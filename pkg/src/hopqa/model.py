"""Core value types and the JSON-Lines trace format.

Every object here is a frozen dataclass; invariants are checked at
construction so an invalid trace cannot be built, serialized, or loaded.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Any, Optional

from hopqa.errors import MalformedRecord, SchemaViolation
from hopqa.text import count_tokens

MAX_SNIPPETS = 10
WIKI_TOKEN_BUDGET = 300
SIMPLIFIED_MAX_TOKENS = 50


class QuestionKind(str, enum.Enum):
    DIRECT = "direct"
    SEQUENTIAL = "sequential"


class ResultStatus(str, enum.Enum):
    ANSWERED = "answered"
    FAILED = "failed"


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    simplified_text: Optional[str] = None
    kind: Optional[QuestionKind] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("question text is empty")
        if self.simplified_text is not None and count_tokens(self.simplified_text) >= SIMPLIFIED_MAX_TOKENS:
            raise ValueError(f"simplified text must have fewer than {SIMPLIFIED_MAX_TOKENS} tokens")

    @property
    def working_text(self) -> str:
        """The text the pipeline reasons over: simplified if available."""
        return self.simplified_text or self.text


@dataclass(frozen=True)
class DecompositionStep:
    index: int
    sub_question: str
    sub_query: str

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("step index must be >= 1")
        if not self.sub_question.strip() or not self.sub_query.strip():
            raise ValueError("sub_question and sub_query must be non-empty")
        if count_tokens(self.sub_query) > count_tokens(self.sub_question):
            raise ValueError("sub_query has more tokens than its sub_question")


@dataclass(frozen=True)
class DecompositionPlan:
    question_id: str
    steps: tuple[DecompositionStep, ...]
    initial_anchor: str = ""

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("plan has no steps")
        if [s.index for s in self.steps] != list(range(1, len(self.steps) + 1)):
            raise ValueError("non-contiguous step indices")

    @property
    def hops(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ContextBundle:
    snippets: tuple[str, ...] = ()
    wiki_sentences: tuple[str, ...] = ()
    wiki_token_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "snippets", tuple(self.snippets))
        object.__setattr__(self, "wiki_sentences", tuple(self.wiki_sentences))
        if len(self.snippets) > MAX_SNIPPETS:
            raise ValueError(f"more than {MAX_SNIPPETS} snippets")
        if self.wiki_token_count != sum(count_tokens(s) for s in self.wiki_sentences):
            raise ValueError("wiki_token_count does not match wiki_sentences")
        if self.wiki_token_count > WIKI_TOKEN_BUDGET:
            raise ValueError(f"wiki context exceeds {WIKI_TOKEN_BUDGET} tokens")

    def items(self) -> list[str]:
        """Snippets first, then Wikipedia sentences."""
        return [*self.snippets, *self.wiki_sentences]

    def __len__(self) -> int:
        return len(self.snippets) + len(self.wiki_sentences)


@dataclass(frozen=True)
class AnswerPair:
    short: str
    long: str


@dataclass(frozen=True)
class HopRecord:
    index: int
    sub_question: str
    sub_query: str
    anchor_in: str
    context: ContextBundle
    raw_answer: AnswerPair
    normalized_short: str


@dataclass(frozen=True)
class QuestionResult:
    question_id: str
    kind: QuestionKind
    hops: tuple[HopRecord, ...] = ()
    final_short: str = ""
    final_long: str = ""
    status: ResultStatus = ResultStatus.ANSWERED
    failure_reason: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "hops", tuple(self.hops))
        if [h.index for h in self.hops] != list(range(1, len(self.hops) + 1)):
            raise ValueError("non-contiguous hop indices")
        if self.status is ResultStatus.ANSWERED:
            if not self.hops:
                raise ValueError("answered result has no hops")
            last = self.hops[-1]
            if self.final_short != last.normalized_short or self.final_long != last.raw_answer.long:
                raise ValueError("final answers must come from the last hop")

    @property
    def answered(self) -> bool:
        return self.status is ResultStatus.ANSWERED

    @classmethod
    def failed(cls, question_id: str, kind: QuestionKind, reason: str, hops=()) -> "QuestionResult":
        return cls(question_id, kind, tuple(hops), "", "", ResultStatus.FAILED, reason)


# -- serialization -----------------------------------------------------------


def result_to_dict(result: QuestionResult) -> dict[str, Any]:
    return {
        "question_id": result.question_id,
        "kind": result.kind.value,
        "hops": [
            {
                "index": h.index,
                "sub_question": h.sub_question,
                "sub_query": h.sub_query,
                "anchor_in": h.anchor_in,
                "context": {
                    "snippets": list(h.context.snippets),
                    "wiki_sentences": list(h.context.wiki_sentences),
                    "wiki_token_count": h.context.wiki_token_count,
                },
                "raw_answer": {"short": h.raw_answer.short, "long": h.raw_answer.long},
                "normalized_short": h.normalized_short,
            }
            for h in result.hops
        ],
        "final_short": result.final_short,
        "final_long": result.final_long,
        "status": result.status.value,
        "failure_reason": result.failure_reason,
    }


def serialize_result(result: QuestionResult) -> str:
    """One-line UTF-8 JSON record (``json.dumps`` escapes embedded newlines)."""
    return json.dumps(result_to_dict(result), ensure_ascii=False)


def _get(obj: dict, key: str, kind: type | tuple, path: str = ""):
    name = f"{path}{key}"
    if key not in obj:
        raise SchemaViolation(name, "missing field")
    value = obj[key]
    if isinstance(value, bool) and kind is not bool:
        raise SchemaViolation(name, f"expected {kind}, got bool")
    if not isinstance(value, kind):
        raise SchemaViolation(name, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _str_list(obj: dict, key: str, path: str) -> list[str]:
    values = _get(obj, key, list, path)
    if not all(isinstance(v, str) for v in values):
        raise SchemaViolation(f"{path}{key}", "expected a list of strings")
    return values


def _enum(enum_cls, value, name):
    try:
        return enum_cls(value)
    except ValueError:
        raise SchemaViolation(name, f"invalid value {value!r}") from None


def _hop_from_dict(raw: Any, position: int) -> HopRecord:
    path = f"hops[{position}]."
    if not isinstance(raw, dict):
        raise SchemaViolation(path[:-1], "expected an object")
    ctx = _get(raw, "context", dict, path)
    ans = _get(raw, "raw_answer", dict, path)
    try:
        context = ContextBundle(
            _str_list(ctx, "snippets", path + "context."),
            _str_list(ctx, "wiki_sentences", path + "context."),
            _get(ctx, "wiki_token_count", int, path + "context."),
        )
    except ValueError as exc:
        raise SchemaViolation(path + "context", str(exc)) from None
    return HopRecord(
        index=_get(raw, "index", int, path),
        sub_question=_get(raw, "sub_question", str, path),
        sub_query=_get(raw, "sub_query", str, path),
        anchor_in=_get(raw, "anchor_in", str, path),
        context=context,
        raw_answer=AnswerPair(_get(ans, "short", str, path + "raw_answer."), _get(ans, "long", str, path + "raw_answer.")),
        normalized_short=_get(raw, "normalized_short", str, path),
    )


def result_from_dict(obj: Any) -> QuestionResult:
    if not isinstance(obj, dict):
        raise SchemaViolation("<record>", "expected a JSON object")
    hops = [_hop_from_dict(h, i) for i, h in enumerate(_get(obj, "hops", list))]
    indices = [h.index for h in hops]
    if indices != list(range(1, len(hops) + 1)):
        raise SchemaViolation("hops", f"non-contiguous hop indices {indices}")
    reason = obj.get("failure_reason")
    if "failure_reason" not in obj:
        raise SchemaViolation("failure_reason", "missing field")
    if reason is not None and not isinstance(reason, str):
        raise SchemaViolation("failure_reason", "expected string or null")
    try:
        return QuestionResult(
            question_id=_get(obj, "question_id", str),
            kind=_enum(QuestionKind, _get(obj, "kind", str), "kind"),
            hops=tuple(hops),
            final_short=_get(obj, "final_short", str),
            final_long=_get(obj, "final_long", str),
            status=_enum(ResultStatus, _get(obj, "status", str), "status"),
            failure_reason=reason,
        )
    except ValueError as exc:
        raise SchemaViolation("final_short", str(exc)) from None


def deserialize_result(record: str) -> QuestionResult:
    try:
        obj = json.loads(record)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"not valid JSON: {exc}") from None
    return result_from_dict(obj)
