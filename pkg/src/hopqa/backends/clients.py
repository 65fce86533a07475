"""Typed clients over the dispatcher for the three external services."""

from __future__ import annotations

import json
import logging
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Optional
from urllib.parse import urlparse

from hopqa.backends.dispatch import BackendRequest, Dispatcher, Endpoint
from hopqa.errors import BackendFailure
from hopqa.prompts import Prompt

log = logging.getLogger(__name__)


def is_absolute_url(link: str) -> bool:
    parsed = urlparse(link)
    return parsed.scheme in ("http", "https") and bool(parsed.netloc)


@dataclass(frozen=True)
class SearchResult:
    title: str
    link: str
    snippet: str = ""

    def __post_init__(self):
        if not is_absolute_url(self.link):
            raise ValueError(f"not an absolute URL: {self.link!r}")


class LLMClient:
    """Chat completion through the dispatcher.

    ``calls`` counts requests per prompt name, which tests use to check
    routing (e.g. direct questions never hit the decomposition prompt).
    """

    def __init__(self, dispatcher: Dispatcher, model_id: str, temperature: float = 0.0):
        self.dispatcher = dispatcher
        self.model_id = model_id
        self.temperature = temperature
        self.calls: Counter = Counter()
        self._lock = threading.Lock()

    def complete(self, prompt: Prompt, name: str, response_hint: str = "text") -> str:
        with self._lock:
            self.calls[name] += 1
        payload = {
            "model_id": self.model_id,
            "system_text": prompt.system_text,
            "user_text": prompt.user_text,
            "temperature": self.temperature,
            "response_hint": response_hint,
        }
        return self.dispatcher.dispatch(BackendRequest.make(Endpoint.LLM_COMPLETE, payload, self.model_id))


class SearchClient:
    def __init__(self, dispatcher: Dispatcher):
        self.dispatcher = dispatcher

    def search(self, query: str, limit: int = 10) -> list[SearchResult]:
        raw = self.dispatcher.dispatch(BackendRequest.make(Endpoint.WEB_SEARCH, {"query": query, "limit": limit}))
        try:
            rows = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BackendFailure(f"search response is not JSON: {exc}") from None
        results = []
        for row in rows:
            try:
                results.append(SearchResult(row["title"], row["link"], row.get("snippet") or ""))
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("dropping malformed search result %r: %s", row, exc)
        return results


class WikiClient:
    def __init__(self, dispatcher: Dispatcher):
        self.dispatcher = dispatcher
        self.calls: Counter = Counter()
        self._lock = threading.Lock()

    def _count(self, name: str) -> None:
        with self._lock:
            self.calls[name] += 1

    def search(self, term: str, limit: int = 1) -> list[str]:
        """Ranked page titles for a search term."""
        self._count("search")
        raw = self.dispatcher.dispatch(BackendRequest.make(Endpoint.WIKI_SEARCH, {"term": term, "limit": limit}))
        try:
            titles = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BackendFailure(f"wiki search response is not JSON: {exc}") from None
        return [t for t in titles if isinstance(t, str) and t][:limit]

    def page_text(self, title: str) -> str:
        self._count("page")
        return self.dispatcher.dispatch(BackendRequest.make(Endpoint.WIKI_PAGE, {"title": title}))

    def top_title(self, term: str) -> Optional[str]:
        titles = self.search(term, 1)
        return titles[0] if titles else None
