"""Chat-completion client with record/replay transcripts."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import httpx

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://openrouter.ai/api/v1/chat/completions"
DEFAULT_MODEL = "qwen/qwen3-235b-a22b-2507"
DEFAULT_KEY_ENV = "OPENROUTER_API_KEY"
MODES = ("live", "record", "replay")


class ProviderError(RuntimeError):
    """Network, authentication or quota failure after retries."""


class ReplayMiss(KeyError):
    """Replay mode found no transcript for the request key."""

    def __str__(self) -> str:
        return f"no recorded transcript for key {self.args[0]}"


@dataclass(frozen=True)
class ModelConfig:
    endpoint: str = DEFAULT_ENDPOINT
    model: str = DEFAULT_MODEL
    temperature: float = 0.9
    top_p: float = 0.9
    max_tokens: int = 8192
    api_key_env: str = DEFAULT_KEY_ENV
    mode: str = "replay"
    transcripts: str | None = None
    requests_per_minute: float = 60.0
    request_timeout: float = 300.0

    def __post_init__(self):
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode in ("record", "replay") and not self.transcripts:
            raise ValueError(f"{self.mode} mode needs a transcript directory")

    def redacted(self) -> dict:
        d = asdict(self)
        d["api_key_set"] = bool(os.environ.get(self.api_key_env))
        return d


@dataclass
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def add(self, other: "Usage") -> None:
        self.prompt_tokens += other.prompt_tokens
        self.completion_tokens += other.completion_tokens


@dataclass(frozen=True)
class Transcript:
    key: str
    prompt_hash: str
    model: str
    params: dict
    response: str
    usage: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def transcript_key(prompt: str, model: str, temperature: float, top_p: float,
                   iteration: int) -> str:
    payload = json.dumps([prompt, model, float(temperature), float(top_p), int(iteration)],
                         ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class TranscriptStore:
    """One JSON file per transcript, named by its key."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self._lock = threading.Lock()

    def path(self, key: str) -> Path:
        return self.dir / f"{key}.json"

    def load(self, key: str) -> Transcript | None:
        p = self.path(key)
        if not p.exists():
            return None
        data = json.loads(p.read_text(encoding="utf-8"))
        if data.get("key") != key:
            raise ValueError(f"{p}: key field does not match file name")
        return Transcript(**data)

    def save(self, t: Transcript) -> Path:
        with self._lock:
            self.dir.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(t.to_json())
            os.replace(tmp, self.path(t.key))
        return self.path(t.key)

    def __iter__(self):
        for p in sorted(self.dir.glob("*.json")):
            yield Transcript(**json.loads(p.read_text(encoding="utf-8")))


class RateLimiter:
    def __init__(self, per_minute: float):
        self.interval = 60.0 / per_minute if per_minute > 0 else 0.0
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            time.sleep(slot - now)


@dataclass(frozen=True)
class LLMResponse:
    text: str
    usage: Usage
    key: str
    replayed: bool


_TRANSIENT = {408, 409, 425, 429, 500, 502, 503, 504}


class LLMClient:
    def __init__(self, config: ModelConfig, transport: httpx.BaseTransport | None = None,
                 retries: int = 3, backoff: float = 2.0):
        self.config = config
        self.store = TranscriptStore(config.transcripts) if config.transcripts else None
        self.limiter = RateLimiter(config.requests_per_minute)
        self.retries = retries
        self.backoff = backoff
        self._transport = transport

    def key(self, prompt: str, iteration: int) -> str:
        c = self.config
        return transcript_key(prompt, c.model, c.temperature, c.top_p, iteration)

    def query(self, prompt: str, iteration: int, timeout: float | None = None) -> LLMResponse:
        """One completion for ``prompt``; ``timeout`` caps each HTTP request."""
        key = self.key(prompt, iteration)
        if self.config.mode == "replay":
            t = self.store.load(key)
            if t is None:
                raise ReplayMiss(key)
            usage = Usage(int(t.usage.get("prompt_tokens", 0)),
                          int(t.usage.get("completion_tokens", 0)))
            return LLMResponse(t.response, usage, key, True)
        text, usage = self._request(prompt, timeout)
        if self.config.mode == "record":
            c = self.config
            self.store.save(Transcript(
                key=key,
                prompt_hash=prompt_hash(prompt),
                model=c.model,
                params={"temperature": c.temperature, "top_p": c.top_p,
                        "iteration": iteration, "max_tokens": c.max_tokens},
                response=text,
                usage=asdict(usage),
            ))
        return LLMResponse(text, usage, key, False)

    def _request(self, prompt: str, timeout: float | None) -> tuple[str, Usage]:
        c = self.config
        api_key = os.environ.get(c.api_key_env)
        if not api_key:
            raise ProviderError(f"environment variable {c.api_key_env} is not set")
        body = {
            "model": c.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": c.temperature,
            "top_p": c.top_p,
            "max_tokens": c.max_tokens,
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        last: Exception | None = None
        limit = c.request_timeout if timeout is None else min(timeout, c.request_timeout)
        with httpx.Client(transport=self._transport, timeout=limit) as http:
            for attempt in range(self.retries + 1):
                if attempt:
                    time.sleep(self.backoff * 2 ** (attempt - 1))
                self.limiter.wait()
                try:
                    r = http.post(c.endpoint, json=body, headers=headers)
                except httpx.TransportError as e:
                    last = e
                    log.warning("transport error (attempt %d): %s", attempt + 1, e)
                    continue
                if r.status_code in _TRANSIENT:
                    last = ProviderError(f"HTTP {r.status_code}: {r.text[:200]}")
                    continue
                if r.status_code != 200:
                    raise ProviderError(f"HTTP {r.status_code}: {r.text[:200]}")
                return _parse_completion(r.json())
        raise ProviderError(f"giving up after {self.retries + 1} attempts: {last}")


def _parse_completion(data: dict) -> tuple[str, Usage]:
    try:
        text = data["choices"][0]["message"]["content"] or ""
    except (KeyError, IndexError, TypeError) as e:
        raise ProviderError(f"malformed completion payload: {e}") from e
    u = data.get("usage") or {}
    return text, Usage(int(u.get("prompt_tokens", 0)), int(u.get("completion_tokens", 0)))


def query(prompt: str, config: ModelConfig, iteration: int) -> tuple[str, Usage]:
    r = LLMClient(config).query(prompt, iteration)
    return r.text, r.usage
