"""Model access: sampling profiles, usage ledger, response cache, streaming with
stop-marker interception, and a scripted responder for offline runs."""

from __future__ import annotations

import enum
import json
import logging
import math
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional, Protocol, Sequence

import httpx

from .cache import DiskCache
from .errors import ParseError, ProviderError, TransportError

log = logging.getLogger(__name__)

Message = tuple[str, str]


class BudgetExceeded(Exception):
    pass


class MarkerOverflow(Exception):
    pass


class ScenarioExhausted(Exception):
    pass


def approximate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.7
    top_p: float = 0.9
    repetition_penalty: float = 1.05
    max_tokens: int = 32768

    def __post_init__(self):
        if not 0 <= self.temperature <= 2:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if not 0 < self.top_p <= 1:
            raise ValueError(f"top_p {self.top_p} outside (0, 1]")
        if self.repetition_penalty < 1:
            raise ValueError("repetition_penalty must be >= 1")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


class Role(str, enum.Enum):
    REASONER = "reasoner"
    SCRAPER = "scraper"


@dataclass(frozen=True)
class ModelProfile:
    name: str
    role: Role
    params: SamplingParams

    @classmethod
    def reasoner(cls, name: str = "QwQ-32B", **overrides) -> "ModelProfile":
        return cls(name, Role.REASONER, SamplingParams(**{"max_tokens": 32768, **overrides}))

    @classmethod
    def scraper(cls, name: str = "Qwen2.5-32B-Instruct", **overrides) -> "ModelProfile":
        return cls(name, Role.SCRAPER, SamplingParams(**{"max_tokens": 8192, **overrides}))

    def to_dict(self) -> dict:
        return {"name": self.name, "role": self.role.value, "params": asdict(self.params)}


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    call_count: int = 0

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(self.prompt_tokens + other.prompt_tokens,
                          self.completion_tokens + other.completion_tokens,
                          self.call_count + other.call_count)

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens,
                "call_count": self.call_count, "total_tokens": self.total}


class UsageLedger:
    def __init__(self):
        self._lock = threading.Lock()
        self.usage = TokenUsage()

    def add(self, usage: TokenUsage) -> None:
        with self._lock:
            self.usage = self.usage + usage

    @property
    def total(self) -> int:
        return self.usage.total


# ---------------------------------------------------------------- backends


class ChatBackend(Protocol):
    def complete(self, request: dict, purpose: str) -> tuple[str, Optional[TokenUsage]]: ...

    def stream(self, request: dict, purpose: str) -> Iterator[str]: ...


class HttpChatBackend:
    """Messages-array chat-completion endpoint (``/v1/chat/completions`` style)."""

    def __init__(self, endpoint: str | None = None, api_key: str | None = None,
                 client: httpx.Client | None = None, timeout: float = 600.0,
                 send_repetition_penalty: bool = True):
        self.endpoint = endpoint or os.environ.get("LLM_ENDPOINT", "")
        if not self.endpoint:
            raise ValueError("LLM endpoint missing (set LLM_ENDPOINT)")
        self._api_key = api_key if api_key is not None else os.environ.get("LLM_API_KEY", "")
        self.client = client or httpx.Client(timeout=timeout)
        self.send_repetition_penalty = send_repetition_penalty

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

    def _body(self, request: dict, stream: bool) -> dict:
        body = {k: request[k] for k in ("model", "messages", "temperature", "top_p", "max_tokens")}
        if self.send_repetition_penalty:
            body["repetition_penalty"] = request["repetition_penalty"]
        if request.get("seed") is not None:
            body["seed"] = request["seed"]
        if stream:
            body["stream"] = True
        return body

    def complete(self, request: dict, purpose: str) -> tuple[str, Optional[TokenUsage]]:
        try:
            resp = self.client.post(self.endpoint, json=self._body(request, False), headers=self._headers())
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise ProviderError(resp.status_code, resp.text[:200])
        try:
            payload = resp.json()
            text = payload["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ParseError(f"unexpected completion payload: {exc}") from None
        usage = payload.get("usage")
        if usage:
            return text, TokenUsage(int(usage.get("prompt_tokens", 0)),
                                    int(usage.get("completion_tokens", 0)), 1)
        return text, None

    def stream(self, request: dict, purpose: str) -> Iterator[str]:
        try:
            with self.client.stream("POST", self.endpoint, json=self._body(request, True),
                                    headers=self._headers()) as resp:
                if not 200 <= resp.status_code < 300:
                    resp.read()
                    raise ProviderError(resp.status_code, resp.text[:200])
                for line in resp.iter_lines():
                    if not line.startswith("data:"):
                        continue
                    data = line[5:].strip()
                    if data == "[DONE]":
                        return
                    try:
                        delta = json.loads(data)["choices"][0].get("delta", {}).get("content")
                    except (ValueError, KeyError, IndexError) as exc:
                        raise ParseError(f"bad stream chunk: {exc}") from None
                    if delta:
                        yield delta
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc


@dataclass
class ScriptEntry:
    response: str
    match: Optional[str] = None
    purpose: Optional[str] = None
    ordinal: Optional[int] = None
    repeat: bool = False

    def matches(self, text: str, purpose: str, ordinal: int) -> bool:
        if self.ordinal is not None and self.ordinal != ordinal:
            return False
        if self.purpose is not None and self.purpose != purpose:
            return False
        if self.match is not None and self.match not in text:
            return False
        return True


class ScriptedResponder:
    """Deterministic stand-in for a model endpoint.

    Each call takes the first unconsumed entry whose filters (purpose, substring of
    the last message, global call ordinal) all match; ``repeat`` entries are never
    consumed. Unmatched calls fall back to ``defaults[purpose]`` then ``default``.
    """

    def __init__(self, entries: Sequence[ScriptEntry], defaults: dict[str, str] | None = None,
                 default: str | None = None, chunk_chars: int = 16):
        self.entries = list(entries)
        self.defaults = dict(defaults or {})
        self.default = default
        self.chunk_chars = chunk_chars
        self.cursor = 0
        self._used: set[int] = set()
        self._lock = threading.Lock()
        self.transcript: list[dict] = []

    @classmethod
    def from_dict(cls, d: dict) -> "ScriptedResponder":
        entries = [ScriptEntry(**e) for e in d.get("entries", [])]
        return cls(entries, d.get("defaults"), d.get("default"))

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ScriptedResponder":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def respond(self, request: dict, purpose: str) -> str:
        last = request["messages"][-1]["content"] if request["messages"] else ""
        with self._lock:
            ordinal = self.cursor
            self.cursor += 1
            for i, entry in enumerate(self.entries):
                if i in self._used or not entry.matches(last, purpose, ordinal):
                    continue
                if not entry.repeat:
                    self._used.add(i)
                text = entry.response
                break
            else:
                if purpose in self.defaults:
                    text = self.defaults[purpose]
                elif self.default is not None:
                    text = self.default
                else:
                    raise ScenarioExhausted(f"no scripted response for call {ordinal} ({purpose})")
            self.transcript.append({"ordinal": ordinal, "purpose": purpose, "response": text})
        return text

    def complete(self, request: dict, purpose: str) -> tuple[str, Optional[TokenUsage]]:
        return self.respond(request, purpose), None

    def stream(self, request: dict, purpose: str) -> Iterator[str]:
        text = self.respond(request, purpose)
        for i in range(0, len(text), self.chunk_chars):
            yield text[i:i + self.chunk_chars]


# ---------------------------------------------------------------- gateway


@dataclass(frozen=True)
class StreamResult:
    text: str
    marker: Optional[str]


class Gateway:
    """Every model call goes through here: budget check, cache, retry, accounting."""

    def __init__(self, backend: ChatBackend, *, token_budget: int | None = None,
                 cache: DiskCache | None = None, retry_backoff: float = 2.0,
                 seed: int | None = None):
        self.backend = backend
        self.ledger = UsageLedger()
        self.token_budget = token_budget
        self.cache = cache
        self.retry_backoff = retry_backoff
        self.seed = seed
        self.listeners: list[Callable[[dict], None]] = []

    def _request(self, profile: ModelProfile, messages: Sequence[Message]) -> dict:
        if not messages:
            raise ValueError("no messages")
        p = profile.params
        return {
            "model": profile.name,
            "messages": [{"role": r, "content": c} for r, c in messages],
            "temperature": p.temperature, "top_p": p.top_p,
            "repetition_penalty": p.repetition_penalty, "max_tokens": p.max_tokens,
            "seed": self.seed,
        }

    def _prompt_tokens(self, request: dict) -> int:
        return sum(approximate_tokens(m["content"]) for m in request["messages"])

    def _check_budget(self, request: dict) -> None:
        if self.token_budget is None:
            return
        spent = self.ledger.total
        if spent >= self.token_budget or spent + self._prompt_tokens(request) > self.token_budget:
            raise BudgetExceeded(
                f"ledger at {spent} tokens; next prompt ~{self._prompt_tokens(request)} "
                f"would pass the budget of {self.token_budget}")

    def _emit(self, event: dict) -> None:
        for fn in self.listeners:
            fn(event)

    def _account(self, purpose: str, profile: ModelProfile, request: dict, text: str,
                 usage: Optional[TokenUsage], cached: bool, marker: Optional[str] = None) -> TokenUsage:
        approximate = usage is None
        if usage is None:
            usage = TokenUsage(self._prompt_tokens(request), approximate_tokens(text), 1)
        if not cached:
            self.ledger.add(usage)
        event = {"purpose": purpose, "model": profile.name, "role": profile.role.value,
                 "prompt_tokens": usage.prompt_tokens, "completion_tokens": usage.completion_tokens,
                 "approximate": approximate, "cached": cached}
        if marker is not None:
            event["marker"] = marker
        self._emit(event)
        return usage

    def _with_retry(self, fn):
        try:
            return fn()
        except TransportError as exc:
            log.warning("transport error, retrying once: %s", exc)
            time.sleep(self.retry_backoff)
            return fn()

    def complete(self, profile: ModelProfile, messages: Sequence[Message],
                 purpose: str = "complete") -> tuple[str, TokenUsage]:
        request = self._request(profile, messages)
        key = {"kind": "complete", **request}
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                usage = TokenUsage(**hit["usage"]) if hit.get("usage") else None
                return hit["text"], self._account(purpose, profile, request, hit["text"], usage, True)
        self._check_budget(request)
        text, usage = self._with_retry(lambda: self.backend.complete(request, purpose))
        if self.cache is not None:
            self.cache.put(key, {"text": text, "usage": asdict(usage) if usage else None})
        return text, self._account(purpose, profile, request, text, usage, False)

    def stream_until_marker(self, profile: ModelProfile, messages: Sequence[Message],
                            stop_markers: Sequence[str], purpose: str = "stream") -> StreamResult:
        if not stop_markers:
            raise ValueError("stop_markers is empty")
        request = self._request(profile, messages)
        key = {"kind": "stream", "stop": list(stop_markers), **request}
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                self._account(purpose, profile, request, hit["text"], None, True, hit["marker"])
                return StreamResult(hit["text"], hit["marker"])
        self._check_budget(request)
        text, marker = self._with_retry(
            lambda: _consume(self.backend.stream(request, purpose), stop_markers,
                             profile.params.max_tokens))
        if self.cache is not None:
            self.cache.put(key, {"text": text, "marker": marker})
        self._account(purpose, profile, request, text, None, False, marker)
        return StreamResult(text, marker)


def _consume(chunks: Iterator[str], stop_markers: Sequence[str], max_tokens: int) -> tuple[str, Optional[str]]:
    longest = max(len(m) for m in stop_markers)
    buf = ""
    try:
        for chunk in chunks:
            start = max(0, len(buf) - longest + 1)
            buf += chunk
            found = [(buf.find(m, start), m) for m in stop_markers]
            found = [(pos, m) for pos, m in found if pos >= 0]
            if found:
                pos, marker = min(found)
                return buf[:pos + len(marker)], marker
            if approximate_tokens(buf) > max_tokens:
                raise MarkerOverflow(f"{max_tokens} tokens streamed without a stop marker")
    finally:
        close = getattr(chunks, "close", None)
        if close:
            close()
    return buf, None
