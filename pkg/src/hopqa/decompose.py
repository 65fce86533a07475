"""Question simplification, sequential decomposition, and direct extraction.

Every plan leaving this module has passed ``validate_plan``. Malformed model
output gets exactly one corrective re-prompt before ``MalformedPlan``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from hopqa.backends.clients import LLMClient
from hopqa.classify.features import AUXILIARIES, WH_WORDS
from hopqa.errors import MalformedPlan
from hopqa.jsonout import JsonOutputError, parse_json_output
from hopqa.model import SIMPLIFIED_MAX_TOKENS, DecompositionPlan, DecompositionStep, Question
from hopqa.prompts import Prompt, load_decomposition_examples, load_template
from hopqa.text import STOPWORDS, count_tokens, split_sentences

log = logging.getLogger(__name__)

DEFAULT_MAX_HOPS = 4
MIN_SUB_QUESTION_TOKENS = 3
STRICT_NOTE = " Be strict: use at most 40 words and keep only the final question."


# -- simplification ----------------------------------------------------------


def needs_simplification(question: Question) -> bool:
    """True if declarative sentences precede the question, or it is over 50 tokens."""
    return len(split_sentences(question.text)) > 1 or count_tokens(question.text) > SIMPLIFIED_MAX_TOKENS


@dataclass(frozen=True)
class Simplification:
    text: str
    truncated: bool = False


def final_interrogative(text: str) -> str:
    sentences = split_sentences(text)
    if not sentences:
        return text.strip()
    asks = [s for s in sentences if s.endswith("?")]
    return (asks or sentences)[-1]


def _fits(text: str) -> bool:
    return bool(text) and count_tokens(text) < SIMPLIFIED_MAX_TOKENS


def simplify(llm: LLMClient, question: Question, template_dir: str | Path | None = None) -> Simplification:
    template = load_template("simplify", template_dir)
    text = llm.complete(template.render(question=question.text, strictness=""), "simplify").strip()
    if _fits(text):
        return Simplification(text)
    log.info("simplification of %s too long (%d tokens); re-prompting", question.id, count_tokens(text))
    text = llm.complete(template.render(question=question.text, strictness=STRICT_NOTE), "simplify").strip()
    if _fits(text):
        return Simplification(text)
    fallback = final_interrogative(question.text)
    tokens = fallback.split()
    if len(tokens) >= SIMPLIFIED_MAX_TOKENS:
        fallback = " ".join(tokens[-(SIMPLIFIED_MAX_TOKENS - 1):])
    return Simplification(fallback, truncated=True)


# -- plan validation ---------------------------------------------------------


def longest_capitalized_span(text: str) -> str:
    """Longest run of capitalized words, ignoring question words and stopwords."""
    best: list[str] = []
    run: list[str] = []
    for token in text.split() + [""]:
        word = token.strip(".,;:!?()[]{}\"'")
        lowered = word.lower()
        if word and word[0].isupper() and lowered not in WH_WORDS | AUXILIARIES | STOPWORDS:
            run.append(word)
            continue
        if len(run) > len(best):
            best = run
        run = []
    return " ".join(best)


def _raw_steps(steps: Sequence[Any]) -> list[tuple[Any, Any, Any]]:
    out = []
    for s in steps:
        if isinstance(s, DecompositionStep):
            out.append((s.index, s.sub_question, s.sub_query))
        else:
            out.append((s.get("index"), s.get("sub_question"), s.get("sub_query")))
    return out


def build_plan(
    question_id: str,
    steps: Sequence[Any],
    initial_anchor: str = "",
    max_hops: int = DEFAULT_MAX_HOPS,
) -> DecompositionPlan:
    """Check raw steps against every plan rule, then construct the plan.

    ``steps`` holds ``DecompositionStep`` objects or dicts with ``index``,
    ``sub_question`` and ``sub_query``. The first violated rule is reported.
    """
    raw = _raw_steps(steps)
    if not raw:
        raise MalformedPlan("empty plan: no steps")
    if len(raw) > max_hops:
        raise MalformedPlan(f"too many steps: {len(raw)} > max_hops={max_hops}")
    indices = [r[0] for r in raw]
    if indices != list(range(1, len(raw) + 1)):
        raise MalformedPlan(f"non-contiguous indices {indices}")
    built = []
    for index, sub_question, sub_query in raw:
        for name, value in (("sub_question", sub_question), ("sub_query", sub_query)):
            if not isinstance(value, str) or not value.strip():
                raise MalformedPlan(f"step {index}: missing or empty {name}")
        if count_tokens(sub_question) < MIN_SUB_QUESTION_TOKENS:
            raise MalformedPlan(f"step {index}: sub_question has fewer than {MIN_SUB_QUESTION_TOKENS} tokens")
        if count_tokens(sub_query) > count_tokens(sub_question):
            raise MalformedPlan(f"step {index}: sub_query is longer than its sub_question")
        built.append(DecompositionStep(index, sub_question.strip(), sub_query.strip()))
    return DecompositionPlan(question_id, tuple(built), initial_anchor.strip())


def validate_plan(plan: DecompositionPlan, max_hops: int = DEFAULT_MAX_HOPS) -> DecompositionPlan:
    checked = build_plan(plan.question_id, plan.steps, plan.initial_anchor, max_hops)
    return plan if checked == plan else checked


# -- LLM-driven decomposition ------------------------------------------------


def _parse_sequential(text: str, question: Question, max_hops: int) -> DecompositionPlan:
    try:
        items = parse_json_output(text, list)
    except JsonOutputError as exc:
        raise MalformedPlan(str(exc)) from None
    steps = []
    anchor = None
    for position, item in enumerate(items, 1):
        if not isinstance(item, dict):
            raise MalformedPlan(f"step {position}: expected an object")
        for name in ("sub_question", "sub_query"):
            if name not in item:
                raise MalformedPlan(f"step {position}: missing field {name!r}")
        index = item.get("step", position)
        if isinstance(index, bool) or not isinstance(index, int):
            raise MalformedPlan(f"step {position}: 'step' must be an integer")
        steps.append({"index": index, "sub_question": item["sub_question"], "sub_query": item["sub_query"]})
        if anchor is None and isinstance(item.get("anchor"), str) and item["anchor"].strip():
            anchor = item["anchor"]
    if anchor is None:
        anchor = longest_capitalized_span(question.working_text)
    return build_plan(question.id, steps, anchor, max_hops)


def _parse_direct(text: str, question: Question, max_hops: int) -> DecompositionPlan:
    try:
        obj = parse_json_output(text, dict)
    except JsonOutputError as exc:
        raise MalformedPlan(str(exc)) from None
    if "sub_query" not in obj:
        raise MalformedPlan("missing field 'sub_query'")
    anchor = obj.get("anchor")
    if not isinstance(anchor, str) or not anchor.strip():
        anchor = longest_capitalized_span(question.working_text)
    step = {"index": 1, "sub_question": question.working_text, "sub_query": obj["sub_query"]}
    return build_plan(question.id, [step], anchor, max_hops)


def _with_correction(prompt: Prompt, reason: str, shape: str) -> Prompt:
    note = f"\n\nYour previous reply was rejected ({reason}). Reply again with only a valid JSON {shape}."
    return Prompt(prompt.system_text, prompt.user_text + note)


def _ask(llm: LLMClient, prompt: Prompt, name: str, hint: str, parse, shape: str) -> DecompositionPlan:
    try:
        return parse(llm.complete(prompt, name, hint))
    except MalformedPlan as exc:
        log.info("%s output rejected (%s); re-prompting once", name, exc)
        return parse(llm.complete(_with_correction(prompt, str(exc), shape), name, hint))


def render_examples(examples: list[dict]) -> str:
    blocks = []
    for n, ex in enumerate(examples, 1):
        blocks.append(f"Example {n}\nOriginal Complex Question: {ex['question']}\nOutput:\n{json.dumps(ex['steps'], ensure_ascii=False)}")
    return "\n\n".join(blocks)


def decompose_sequential(
    llm: LLMClient,
    question: Question,
    max_hops: int = DEFAULT_MAX_HOPS,
    template_dir: str | Path | None = None,
) -> DecompositionPlan:
    template = load_template("decompose_sequential", template_dir)
    examples = render_examples(load_decomposition_examples(template_dir))
    prompt = template.render(question=question.working_text, examples=examples)
    return _ask(
        llm, prompt, "decompose_sequential", "json_array",
        lambda text: _parse_sequential(text, question, max_hops), "array",
    )


def extract_direct(
    llm: LLMClient,
    question: Question,
    max_hops: int = DEFAULT_MAX_HOPS,
    template_dir: str | Path | None = None,
) -> DecompositionPlan:
    prompt = load_template("extract_direct", template_dir).render(question=question.working_text)
    return _ask(
        llm, prompt, "extract_direct", "json_object",
        lambda text: _parse_direct(text, question, max_hops), "object",
    )
