"""Exact-match and concept-level scoring of prediction files.

The concept-level score here is an approximation built on a synonym table:
two answers agree if their canonical forms map to overlapping concept ids.
It is a stand-in, not a validated concept-normalization scorer.
"""

from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from hopqa.errors import MalformedInput, MalformedTable
from hopqa.text import nfc

log = logging.getLogger(__name__)

_EDGE = string.punctuation + string.whitespace + "“”‘’«»"
APPROXIMATION_NOTE = "concept-level score approximated with a synonym table; not the official scorer"


def canonical(text: str) -> str:
    return " ".join(nfc(text).lower().strip(_EDGE).split())


def exact_match(pred: str, gold: str) -> int:
    return int(canonical(pred) == canonical(gold))


class ConceptTable:
    """Canonical surface form -> set of concept ids."""

    def __init__(self, mapping: Optional[Mapping[str, Iterable[str]]] = None):
        self._map: dict[str, frozenset[str]] = {}
        for surface, ids in (mapping or {}).items():
            self.add(surface, ids)

    def add(self, surface: str, ids: Iterable[str]) -> None:
        key = canonical(surface)
        self._map[key] = self._map.get(key, frozenset()) | frozenset(ids)

    def concepts(self, text: str) -> frozenset[str]:
        key = canonical(text)
        return self._map.get(key, frozenset({key}))

    def __len__(self) -> int:
        return len(self._map)

    @classmethod
    def load(cls, path: str | Path) -> "ConceptTable":
        """JSONL rows of ``{"concept_id": ..., "surface_forms": [...]}``."""
        table = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedTable(f"{path}:{lineno}: {exc}") from None
                cid, forms = (row.get("concept_id"), row.get("surface_forms")) if isinstance(row, dict) else (None, None)
                if not isinstance(cid, str) or not isinstance(forms, list) or not all(isinstance(f, str) for f in forms):
                    raise MalformedTable(f"{path}:{lineno}: need concept_id (string) and surface_forms (list of strings)")
                for form in forms:
                    table.add(form, [cid])
        return table


def concept_score(pred: str, gold: str, table: Optional[ConceptTable] = None) -> int:
    if exact_match(pred, gold):
        return 1
    table = table or ConceptTable()
    return int(bool(table.concepts(pred) & table.concepts(gold)))


@dataclass(frozen=True)
class QuestionScore:
    id: str
    em: int
    cl: int


@dataclass(frozen=True)
class EvalReport:
    n: int
    exact_match: float
    concept_level: float
    per_question: tuple[QuestionScore, ...] = field(default_factory=tuple)
    missing: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "exact_match": self.exact_match,
            "concept_level": self.concept_level,
            "per_question": [{"id": q.id, "em": q.em, "cl": q.cl} for q in self.per_question],
            "missing": list(self.missing),
            "note": APPROXIMATION_NOTE,
        }


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedInput(f"{path}:{lineno}: {exc}") from None
                if not isinstance(row, dict):
                    raise MalformedInput(f"{path}:{lineno}: expected an object")
                rows.append(row)
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    return rows


def _prediction(row: dict, path, lineno: int) -> tuple[str, str]:
    """(id, short answer) from a prediction row or a pipeline result row."""
    pid = row.get("id", row.get("question_id"))
    short = row.get("short_answer", row.get("final_short"))
    if not isinstance(pid, str) or not isinstance(short, str):
        raise MalformedInput(f"{path}: row {lineno} needs string id and short_answer")
    return pid, short


def score(preds: Mapping[str, str], golds: Mapping[str, str], table: Optional[ConceptTable] = None) -> EvalReport:
    rows, missing = [], []
    for gid in sorted(golds):
        if gid not in preds:
            missing.append(gid)
            rows.append(QuestionScore(gid, 0, 0))
            continue
        rows.append(QuestionScore(gid, exact_match(preds[gid], golds[gid]), concept_score(preds[gid], golds[gid], table)))
    n = len(rows)
    em = sum(r.em for r in rows) / n if n else 0.0
    cl = sum(r.cl for r in rows) / n if n else 0.0
    return EvalReport(n, em, cl, tuple(rows), tuple(missing))


def evaluate_run(
    preds_path: str | Path, golds_path: str | Path, table: Optional[ConceptTable] = None
) -> EvalReport:
    golds: dict[str, str] = {}
    for lineno, row in enumerate(_read_jsonl(golds_path), 1):
        gid, answer = row.get("id"), row.get("answer")
        if not isinstance(gid, str) or not isinstance(answer, str):
            raise MalformedInput(f"{golds_path}: row {lineno} needs string id and answer")
        if gid in golds:
            raise MalformedInput(f"{golds_path}: duplicate gold id {gid!r}")
        golds[gid] = answer
    preds: dict[str, str] = {}
    for lineno, row in enumerate(_read_jsonl(preds_path), 1):
        pid, short = _prediction(row, preds_path, lineno)
        preds[pid] = short
    report = score(preds, golds, table)
    if report.missing:
        log.warning("%d gold questions have no prediction and score 0", len(report.missing))
    return report


def format_report(report: EvalReport, run: str = "1", run_id: str = "-") -> str:
    """Table in the layout: Run | ID | Exact Match Score | Concept Level Score."""
    headers = ("Run", "ID", "Exact Match Score", "Concept Level Score")
    row = (run, run_id, f"{report.exact_match:.3f}", f"{report.concept_level:.3f}")
    widths = [max(len(h), len(c)) for h, c in zip(headers, row)]
    line = "  ".join("-" * w for w in widths)
    fmt = lambda cells: "  ".join(c.center(w) for c, w in zip(cells, widths))  # noqa: E731
    out = [line, fmt(headers), line, fmt(row), line, f"n = {report.n}; {APPROXIMATION_NOTE}"]
    if report.missing:
        out.append(f"{len(report.missing)} question(s) without a prediction were scored 0")
    return "\n".join(out)
