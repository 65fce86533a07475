"""Request canonicalization, the response cache, transcripts, and dispatch.

Three modes:

* ``live``: call the transport (through the cache).
* ``record``: like live, and append every outcome to a transcript file.
* ``replay``: answer from the transcript only; the transport is never touched.

A transcript may hold several entries for one request digest. Replay consumes
them in order and keeps serving the last one, which lets a fixture express a
transient failure followed by a success.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from hopqa.errors import BackendFailure, IoFailure, QuotaExceeded, TranscriptMiss

log = logging.getLogger(__name__)


class Endpoint(str, enum.Enum):
    LLM_COMPLETE = "llm_complete"
    WEB_SEARCH = "web_search"
    WIKI_SEARCH = "wiki_search"
    WIKI_PAGE = "wiki_page"


class Mode(str, enum.Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class BackendRequest:
    endpoint: Endpoint
    payload: str
    model_id: Optional[str] = None

    @classmethod
    def make(cls, endpoint: Endpoint | str, payload: dict | str, model_id: Optional[str] = None) -> "BackendRequest":
        if isinstance(payload, str):
            payload = json.loads(payload)
        return cls(Endpoint(endpoint), canonical_json(payload), model_id)

    @property
    def data(self) -> dict:
        return json.loads(self.payload)

    @property
    def key(self) -> str:
        body = canonical_json({"endpoint": self.endpoint.value, "model_id": self.model_id, "payload": self.data})
        return hashlib.sha256(body.encode("utf-8")).hexdigest()


Transport = Callable[[BackendRequest], str]


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        # mkstemp creates 0600; keep the mode of the file being replaced
        os.chmod(tmp, path.stat().st_mode & 0o777 if path.exists() else 0o644)
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


@dataclass(frozen=True)
class CacheEntry:
    key: str
    response: str
    created_at: float


class ResponseCache:
    """Content-addressed files under ``root/<k[:2]>/<k[2:4]>/<k>.json``."""

    def __init__(self, root: str | Path, ttl: Optional[float] = None, clock: Callable[[], float] = time.time):
        self.root = Path(root)
        self.ttl = ttl
        self.clock = clock

    def path_for(self, key: str) -> Path:
        return self.root / key[:2] / key[2:4] / f"{key}.json"

    def get(self, key: str) -> Optional[CacheEntry]:
        path = self.path_for(key)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError) as exc:
            raise IoFailure(f"unreadable cache entry {path}: {exc}") from exc
        entry = CacheEntry(data["key"], data["response"], float(data["created_at"]))
        if self.ttl is not None and self.clock() - entry.created_at > self.ttl:
            return None
        return entry

    def put(self, entry: CacheEntry) -> None:
        body = json.dumps({"key": entry.key, "response": entry.response, "created_at": entry.created_at}, ensure_ascii=False)
        try:
            atomic_write(self.path_for(entry.key), body)
        except OSError as exc:
            raise IoFailure(f"cannot write cache entry {entry.key}: {exc}") from exc


class Transcript:
    """JSONL of ``{key, endpoint, payload, response}`` (or ``error`` instead of ``response``)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._lines: list[str] = []
        self._queues: dict[str, deque] = defaultdict(deque)
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").split("\n"):
                if line.strip():
                    entry = json.loads(line)
                    self._lines.append(line)
                    self._queues[entry["key"]].append(entry)

    def __len__(self) -> int:
        return len(self._lines)

    def next_entry(self, key: str) -> Optional[dict]:
        with self._lock:
            queue = self._queues.get(key)
            if not queue:
                return None
            return queue.popleft() if len(queue) > 1 else queue[0]

    def append(self, entry: dict) -> None:
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self._lines.append(line)
            try:
                atomic_write(self.path, "\n".join(self._lines) + "\n")
            except OSError as exc:
                raise IoFailure(f"cannot write transcript {self.path}: {exc}") from exc


def _no_transport(request: BackendRequest) -> str:
    raise BackendFailure(f"no transport configured for {request.endpoint.value}")


class Dispatcher:
    def __init__(
        self,
        mode: Mode | str = Mode.LIVE,
        transport: Optional[Transport] = None,
        transcript: Optional[Transcript] = None,
        cache: Optional[ResponseCache] = None,
        retries: int = 1,
        backoff_base: float = 1.0,
        backoff_factor: float = 4.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.mode = Mode(mode)
        if self.mode is not Mode.LIVE and transcript is None:
            raise ValueError(f"{self.mode.value} mode needs a transcript")
        self.transport = transport or _no_transport
        self.transcript = transcript
        self.cache = cache
        self.retries = retries
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.sleep = sleep

    def dispatch(self, request: BackendRequest) -> str:
        if self.mode is Mode.REPLAY:
            return self._replay(request)
        key = request.key
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                self._record(request, response=hit.response)
                return hit.response
        try:
            response = self._call_with_retry(request)
        except BackendFailure as exc:
            self._record(request, error=exc)
            raise
        if self.cache is not None:
            self.cache.put(CacheEntry(key, response, time.time()))
        self._record(request, response=response)
        return response

    def _call_with_retry(self, request: BackendRequest) -> str:
        attempt = 0
        while True:
            try:
                return self.transport(request)
            except BackendFailure as exc:
                if attempt >= self.retries:
                    raise
                delay = self.backoff_base * self.backoff_factor**attempt
                log.warning("%s failed (%s); retrying in %.1fs", request.endpoint.value, exc, delay)
                self.sleep(delay)
                attempt += 1

    def _record(self, request: BackendRequest, response: Optional[str] = None, error: Optional[BaseException] = None):
        if self.mode is not Mode.RECORD:
            return
        entry = {"key": request.key, "endpoint": request.endpoint.value, "payload": request.payload}
        if error is None:
            entry["response"] = response
        else:
            entry["error"] = "quota" if isinstance(error, QuotaExceeded) else "backend"
            entry["message"] = str(error)
        self.transcript.append(entry)

    def _replay(self, request: BackendRequest) -> str:
        key = request.key
        entry = self.transcript.next_entry(key)
        if entry is None:
            raise TranscriptMiss(key, request.endpoint.value)
        if "error" in entry:
            cls = QuotaExceeded if entry["error"] == "quota" else BackendFailure
            raise cls(entry.get("message") or f"recorded {entry['error']} failure")
        return entry["response"]
