"""External service adapters with caching and record/replay."""

from dataclasses import dataclass

from hopqa.backends.clients import LLMClient, SearchClient, SearchResult, WikiClient
from hopqa.backends.dispatch import (
    BackendRequest,
    CacheEntry,
    Dispatcher,
    Endpoint,
    Mode,
    ResponseCache,
    Transcript,
    canonical_json,
)


@dataclass
class Backends:
    """Service handles for one pipeline run.

    Decomposition and answering use separate LLM clients so they can point at
    different models.
    """

    decompose_llm: LLMClient
    answer_llm: LLMClient
    search: SearchClient
    wiki: WikiClient


__all__ = [
    "BackendRequest",
    "Backends",
    "CacheEntry",
    "Dispatcher",
    "Endpoint",
    "LLMClient",
    "Mode",
    "ResponseCache",
    "SearchClient",
    "SearchResult",
    "Transcript",
    "WikiClient",
    "canonical_json",
]
