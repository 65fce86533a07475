"""End-to-end question answering and the batch runner."""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from hopqa.backends import Backends, Dispatcher, LLMClient, Mode, ResponseCache, SearchClient, Transcript, WikiClient
from hopqa.backends.dispatch import Transport, atomic_write
from hopqa.backends.transport import HttpTransport
from hopqa.classify import ClassifierModel, classify
from hopqa.config import Config
from hopqa.decompose import decompose_sequential, extract_direct, needs_simplification, simplify
from hopqa.errors import HopError, HopQAError, IoFailure, MalformedInput, QuotaExceeded
from hopqa.generate import HopSettings, run_hop
from hopqa.model import Question, QuestionKind, QuestionResult, ResultStatus, deserialize_result, serialize_result
from hopqa.text import nfc

log = logging.getLogger(__name__)


def make_backends(
    config: Config, transport: Optional[Transport] = None, sleep: Optional[Callable[[float], None]] = None
) -> Backends:
    mode = Mode(config.mode)
    transcript = Transcript(config.transcript_path) if config.transcript_path else None
    cache = None
    if mode is not Mode.REPLAY and config.cache_dir:
        cache = ResponseCache(config.cache_dir, config.cache_ttl)
    if transport is None and mode is not Mode.REPLAY:
        transport = HttpTransport(config.http)
    extra = {"sleep": sleep} if sleep is not None else {}
    dispatcher = Dispatcher(mode, transport, transcript, cache, **extra)
    return Backends(
        decompose_llm=LLMClient(dispatcher, config.decompose_model, config.temperature),
        answer_llm=LLMClient(dispatcher, config.answer_model, config.temperature),
        search=SearchClient(dispatcher),
        wiki=WikiClient(dispatcher),
    )


def hop_settings(config: Config) -> HopSettings:
    return HopSettings(
        search_limit=config.search_limit,
        token_budget=config.wiki_token_budget,
        max_articles=config.max_articles,
        max_sentences=config.max_sentences,
        use_wikipedia=config.use_wikipedia,
        normalize_titles=config.normalize_titles,
        title_guard=config.title_guard,
        prompt_char_budget=config.prompt_char_budget,
        template_dir=Path(config.template_dir) if config.template_dir else None,
    )


def _reason(stage: str, exc: BaseException) -> str:
    prefix = "quota: " if isinstance(exc, QuotaExceeded) or isinstance(getattr(exc, "cause", None), QuotaExceeded) else ""
    return f"{prefix}{stage}: {exc}"


def answer_question(
    config: Config, backends: Backends, classifier: ClassifierModel, question: Question
) -> QuestionResult:
    """Simplify, classify, plan, then run the hop chain; never raises for service errors."""
    threshold = config.classifier_threshold
    if needs_simplification(question):
        try:
            simplified = simplify(backends.decompose_llm, question, config.template_dir)
        except HopQAError as exc:
            kind = classify(classifier, question.text, threshold)
            return QuestionResult.failed(question.id, kind, _reason("simplification", exc))
        question = Question(question.id, question.text, simplified.text)

    kind = classify(classifier, question.working_text, threshold)
    question = Question(question.id, question.text, question.simplified_text, kind)
    try:
        if kind is QuestionKind.SEQUENTIAL:
            plan = decompose_sequential(backends.decompose_llm, question, config.max_hops, config.template_dir)
        else:
            plan = extract_direct(backends.decompose_llm, question, config.max_hops, config.template_dir)
    except HopQAError as exc:
        return QuestionResult.failed(question.id, kind, _reason("decomposition", exc))

    settings = hop_settings(config)
    hops = []
    anchor = plan.initial_anchor
    for step in plan.steps:
        try:
            record = run_hop(backends, step, anchor, settings)
        except HopError as exc:
            return QuestionResult.failed(question.id, kind, _reason("answering", exc), hops)
        hops.append(record)
        anchor = record.normalized_short
    last = hops[-1]
    return QuestionResult(question.id, kind, tuple(hops), last.normalized_short, last.raw_answer.long)


# -- batch -------------------------------------------------------------------


@dataclass(frozen=True)
class RoundSummary:
    round: int
    attempted: int
    answered: int
    failed: int


@dataclass
class BatchSummary:
    total: int
    skipped: int = 0
    rounds: list[RoundSummary] = field(default_factory=list)
    answered: int = 0
    failed: int = 0

    @property
    def recovered(self) -> int:
        return sum(r.answered for r in self.rounds[1:])

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "skipped": self.skipped,
            "answered": self.answered,
            "failed": self.failed,
            "recovered": self.recovered,
            "rounds": [vars(r) for r in self.rounds],
        }


def read_questions(path: str | Path) -> list[Question]:
    questions, seen = [], set()
    try:
        lines = Path(path).read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            qid, text = row["id"], row["question"]
            if not isinstance(qid, str) or not isinstance(text, str):
                raise TypeError("id and question must be strings")
            question = Question(qid, nfc(text).strip())
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"{path}:{lineno}: {exc}") from None
        if qid in seen:
            raise MalformedInput(f"{path}:{lineno}: duplicate id {qid!r}")
        seen.add(qid)
        questions.append(question)
    return questions


def scan_output(path: str | Path) -> dict[str, QuestionResult]:
    """Latest result per id in an existing output file; unreadable lines are skipped."""
    found: dict[str, QuestionResult] = {}
    p = Path(path)
    if not p.exists():
        return found
    for line in p.read_text(encoding="utf-8").split("\n"):
        if not line.strip():
            continue
        try:
            result = deserialize_result(line)
        except HopQAError:
            log.warning("skipping unreadable line in %s", p)
            continue
        found[result.question_id] = result
    return found


class _Writer:
    """Serializes appends from worker threads."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, result: QuestionResult) -> None:
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(serialize_result(result) + "\n")
            except OSError as exc:
                raise IoFailure(f"cannot write {self.path}: {exc}") from exc


def run_batch(
    config: Config,
    input_path: str | Path,
    output_path: str | Path,
    backends: Backends,
    classifier: ClassifierModel,
) -> BatchSummary:
    """Answer every question, reprocess failures, and leave one line per id in input order.

    Results are appended as they finish; when the batch ends the file is
    rewritten in input order so output does not depend on scheduling.
    Questions already answered in an existing output file are skipped.
    """
    questions = read_questions(input_path)
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    results = scan_output(output_path)
    order = {q.id: i for i, q in enumerate(questions)}
    results = {k: v for k, v in results.items() if k in order}

    summary = BatchSummary(total=len(questions))
    pending = [q for q in questions if not (q.id in results and results[q.id].answered)]
    summary.skipped = len(questions) - len(pending)
    writer = _Writer(output_path)

    def work(question: Question) -> QuestionResult:
        result = answer_question(config, backends, classifier, question)
        writer.append(result)
        return result

    for rnd in range(1, config.reprocess_rounds + 2):
        if not pending:
            break
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(work, pending))
        for r in outcomes:
            results[r.question_id] = r
        failed = [q for q, r in zip(pending, outcomes) if not r.answered]
        summary.rounds.append(RoundSummary(rnd, len(pending), len(pending) - len(failed), len(failed)))
        if failed:
            log.info("round %d: %d question(s) failed", rnd, len(failed))
        pending = failed

    final = [results[q.id] for q in questions if q.id in results]
    try:
        atomic_write(output_path, "".join(serialize_result(r) + "\n" for r in final))
    except OSError as exc:
        raise IoFailure(f"cannot write {output_path}: {exc}") from exc
    summary.answered = sum(r.status is ResultStatus.ANSWERED for r in final)
    summary.failed = len(final) - summary.answered
    return summary
