"""Per-hop answer generation and the hop runner."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from hopqa.backends import Backends
from hopqa.backends.clients import LLMClient
from hopqa.errors import HopError, HopQAError, MalformedAnswer, PromptBudgetExceeded, UnverifiableAnswer
from hopqa.jsonout import JsonOutputError, parse_json_output
from hopqa.model import MAX_SNIPPETS, WIKI_TOKEN_BUDGET, AnswerPair, ContextBundle, DecompositionStep, HopRecord
from hopqa.normalize import AnswerKind, infer_answer_kind, normalize
from hopqa.prompts import Prompt, PromptTemplate, load_template
from hopqa.retrieve import retrieve_context

log = logging.getLogger(__name__)

ANSWER_KEYS = frozenset({"long_answer", "short_answer"})
NO_CONTEXT = "(none)"


@dataclass(frozen=True)
class AnswerRequest:
    sub_question: str
    sub_query: str
    anchor: str
    context: ContextBundle

    def __post_init__(self):
        if not self.sub_question.strip():
            raise ValueError("sub_question is empty")


@dataclass(frozen=True)
class HopSettings:
    search_limit: int = MAX_SNIPPETS
    token_budget: int = WIKI_TOKEN_BUDGET
    max_articles: int = 3
    max_sentences: Optional[int] = None
    use_wikipedia: bool = True
    normalize_titles: bool = True
    title_guard: bool = True
    prompt_char_budget: int = 16_000
    template_dir: Optional[Path] = None


def format_context(context: ContextBundle) -> str:
    items = context.items()
    if not items:
        return NO_CONTEXT
    return "\n" + "\n".join(f"{n}. {item}" for n, item in enumerate(items, 1))


def render_answer_prompt(request: AnswerRequest, template: PromptTemplate) -> Prompt:
    return template.render(
        sub_question=request.sub_question,
        sub_query=request.sub_query,
        anchor=request.anchor or NO_CONTEXT,
        context=format_context(request.context),
    )


def parse_answer(text: str) -> AnswerPair:
    try:
        obj = parse_json_output(text, dict)
    except JsonOutputError as exc:
        raise MalformedAnswer(str(exc)) from None
    if set(obj) != ANSWER_KEYS:
        raise MalformedAnswer(f"expected keys {sorted(ANSWER_KEYS)}, got {sorted(obj)}")
    long, short = obj["long_answer"], obj["short_answer"]
    if not isinstance(long, str) or not long.strip():
        raise MalformedAnswer("long_answer must be a non-empty string")
    if not isinstance(short, str) or not short.strip():
        raise MalformedAnswer("short_answer must be a non-empty string")
    return AnswerPair(short=short.strip(), long=long.strip())


def generate_answer(llm: LLMClient, prompt: Prompt) -> AnswerPair:
    """Ask for the long/short answer pair; one corrective re-prompt on bad JSON."""
    try:
        return parse_answer(llm.complete(prompt, "answer", "json_object"))
    except MalformedAnswer as exc:
        log.info("answer rejected (%s); re-prompting once", exc)
        retry = Prompt(
            prompt.system_text,
            prompt.user_text + f"\n\nYour previous reply was rejected ({exc}). "
            'Reply with only the JSON object {"long_answer": ..., "short_answer": ...}.',
        )
        return parse_answer(llm.complete(retry, "answer", "json_object"))


def run_hop(
    backends: Backends,
    step: DecompositionStep,
    anchor_in: str,
    settings: HopSettings | None = None,
) -> HopRecord:
    settings = settings or HopSettings()
    try:
        context = retrieve_context(
            backends.search,
            backends.wiki,
            step.sub_query,
            anchor_in,
            search_limit=settings.search_limit,
            token_budget=settings.token_budget,
            max_articles=settings.max_articles,
            max_sentences=settings.max_sentences,
            use_wikipedia=settings.use_wikipedia,
        )
        request = AnswerRequest(step.sub_question, step.sub_query, anchor_in, context)
        prompt = render_answer_prompt(request, load_template("answer", settings.template_dir))
        if len(prompt) > settings.prompt_char_budget:
            raise PromptBudgetExceeded(f"prompt has {len(prompt)} chars, budget {settings.prompt_char_budget}")
        answer = generate_answer(backends.answer_llm, prompt)
        wiki = backends.wiki if settings.normalize_titles else None
        kind = infer_answer_kind(step.sub_question)
        try:
            normalized = normalize(wiki, answer.short, kind, guard=settings.title_guard)
        except UnverifiableAnswer as exc:
            log.warning("hop %d: %s; normalizing without the yes/no rule", step.index, exc)
            normalized = normalize(wiki, answer.short, AnswerKind.UNKNOWN, guard=settings.title_guard)
    except (HopQAError, ValueError) as exc:
        raise HopError(step.index, exc) from exc
    return HopRecord(step.index, step.sub_question, step.sub_query, anchor_in, context, answer, normalized)
