"""Run configuration, loaded from a single JSON document."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from hopqa.backends.transport import HttpSettings


@dataclass
class Config:
    decompose_model: str = "gpt-4o-mini"
    answer_model: str = "o3-mini"
    temperature: float = 0.0
    search_limit: int = 10
    wiki_token_budget: int = 300
    max_articles: int = 3
    max_sentences: Optional[int] = None
    max_hops: int = 4
    classifier_path: Optional[str] = None
    classifier_threshold: Optional[float] = 0.5  # None defers to the threshold stored in the model
    embedding_dim: int = 256
    reprocess_rounds: int = 1
    workers: int = 4
    mode: str = "live"
    cache_dir: Optional[str] = ".hopqa-cache"
    cache_ttl: Optional[float] = None
    transcript_path: Optional[str] = None
    template_dir: Optional[str] = None
    prompt_char_budget: int = 16_000
    use_wikipedia: bool = True
    normalize_titles: bool = True
    title_guard: bool = True
    http: HttpSettings = field(default_factory=HttpSettings)

    def __post_init__(self):
        if isinstance(self.http, dict):
            self.http = HttpSettings(**self.http)
        if self.mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 1 <= self.search_limit <= 10:
            raise ValueError("search_limit must be in [1, 10]")
        if not 0 < self.wiki_token_budget <= 300:
            raise ValueError("wiki_token_budget must be in (0, 300]")
        if self.max_hops < 1 or self.workers < 1 or self.reprocess_rounds < 0:
            raise ValueError("max_hops and workers must be >= 1, reprocess_rounds >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
