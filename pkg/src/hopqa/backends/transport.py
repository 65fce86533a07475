"""Live HTTP transport.

Maps each endpoint onto a concrete provider and returns the response in the
package's wire shape (so transcripts and caches are provider-independent):

* llm_complete -> OpenAI-compatible ``/chat/completions``; returns the message text
* web_search   -> Google Custom Search JSON API; returns ``[{title, link, snippet}]``
* wiki_search  -> MediaWiki ``list=search``; returns ``[title, ...]``
* wiki_page    -> MediaWiki ``prop=extracts`` plain text; returns the text

Credentials come from the environment and never enter request payloads.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Optional

import requests

from hopqa.backends.dispatch import BackendRequest, Endpoint
from hopqa.errors import BackendFailure, QuotaExceeded

USER_AGENT = "hopqa/0.1 (multi-hop QA research tool)"


@dataclass
class HttpSettings:
    llm_base_url: str = "https://api.openai.com/v1"
    llm_api_key_env: str = "OPENAI_API_KEY"
    search_url: str = "https://www.googleapis.com/customsearch/v1"
    search_key_env: str = "GOOGLE_API_KEY"
    search_cx_env: str = "GOOGLE_CSE_ID"
    wiki_api_url: str = "https://en.wikipedia.org/w/api.php"
    timeout: float = 60.0
    min_interval: float = 0.0  # seconds between requests to the same provider
    # reasoning models reject the temperature parameter; it is left out for these prefixes
    no_temperature_prefixes: tuple[str, ...] = ("o1", "o3", "o4")

    def __post_init__(self):
        self.no_temperature_prefixes = tuple(self.no_temperature_prefixes)


class RateLimiter:
    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next - now
            self._next = max(now, self._next) + self.min_interval
        if delay > 0:
            time.sleep(delay)


class HttpTransport:
    def __init__(self, settings: Optional[HttpSettings] = None, session: Optional[requests.Session] = None):
        self.settings = settings or HttpSettings()
        self.session = session or requests.Session()
        self.session.headers.setdefault("User-Agent", USER_AGENT)
        self._limiters = {e: RateLimiter(self.settings.min_interval) for e in Endpoint}

    def __call__(self, request: BackendRequest) -> str:
        self._limiters[request.endpoint].wait()
        handler = {
            Endpoint.LLM_COMPLETE: self._llm,
            Endpoint.WEB_SEARCH: self._search,
            Endpoint.WIKI_SEARCH: self._wiki_search,
            Endpoint.WIKI_PAGE: self._wiki_page,
        }[request.endpoint]
        return handler(request.data)

    def _send(self, method: str, url: str, **kwargs) -> dict:
        try:
            resp = self.session.request(method, url, timeout=self.settings.timeout, **kwargs)
        except requests.RequestException as exc:
            raise BackendFailure(f"{method} {url}: {exc}") from exc
        if resp.status_code == 429:
            raise QuotaExceeded(f"{url}: HTTP 429")
        if resp.status_code >= 400:
            raise BackendFailure(f"{url}: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendFailure(f"{url}: response is not JSON") from exc

    def _env(self, name: str) -> str:
        value = os.environ.get(name)
        if not value:
            raise BackendFailure(f"environment variable {name} is not set")
        return value

    def _llm(self, payload: dict) -> str:
        body = {
            "model": payload["model_id"],
            "messages": [
                {"role": "system", "content": payload["system_text"]},
                {"role": "user", "content": payload["user_text"]},
            ],
        }
        if not payload["model_id"].startswith(self.settings.no_temperature_prefixes):
            body["temperature"] = payload["temperature"]
        if payload.get("response_hint") == "json_object":
            body["response_format"] = {"type": "json_object"}
        headers = {"Authorization": f"Bearer {self._env(self.settings.llm_api_key_env)}"}
        data = self._send("POST", self.settings.llm_base_url.rstrip("/") + "/chat/completions", json=body, headers=headers)
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendFailure(f"unexpected chat completion shape: {exc}") from exc

    def _search(self, payload: dict) -> str:
        params = {
            "key": self._env(self.settings.search_key_env),
            "cx": self._env(self.settings.search_cx_env),
            "q": payload["query"],
            "num": payload["limit"],
        }
        data = self._send("GET", self.settings.search_url, params=params)
        items = [
            {"title": it.get("title", ""), "link": it.get("link", ""), "snippet": it.get("snippet", "")}
            for it in data.get("items", [])
        ]
        return json.dumps(items[: payload["limit"]], ensure_ascii=False)

    def _wiki_search(self, payload: dict) -> str:
        params = {
            "action": "query",
            "list": "search",
            "srsearch": payload["term"],
            "srlimit": payload["limit"],
            "format": "json",
        }
        data = self._send("GET", self.settings.wiki_api_url, params=params)
        titles = [hit["title"] for hit in data.get("query", {}).get("search", [])]
        return json.dumps(titles, ensure_ascii=False)

    def _wiki_page(self, payload: dict) -> str:
        params = {
            "action": "query",
            "prop": "extracts",
            "explaintext": 1,
            "redirects": 1,
            "titles": payload["title"],
            "format": "json",
        }
        data = self._send("GET", self.settings.wiki_api_url, params=params)
        pages = data.get("query", {}).get("pages", {})
        for page in pages.values():
            if "missing" not in page:
                return page.get("extract", "")
        raise BackendFailure(f"wikipedia page {payload['title']!r} not found")
