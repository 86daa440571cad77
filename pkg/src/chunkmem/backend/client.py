"""Chat backends: scripted replay, plain callables, and an HTTP client."""

from __future__ import annotations

import os
import random
import threading
import time
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx


class BackendError(Exception):
    """Base class for failures talking to a model."""


class TransportError(BackendError):
    pass


class AuthError(BackendError):
    pass


class ResponseMalformed(BackendError):
    pass


class ScriptExhausted(BackendError):
    pass


class BudgetExceeded(BackendError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    user_text: str
    system_text: str | None = None
    temperature: float = 0.0
    top_p: float = 1.0
    max_output_tokens: int = 512

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    def messages(self) -> list[dict[str, str]]:
        msgs = []
        if self.system_text:
            msgs.append({"role": "system", "content": self.system_text})
        msgs.append({"role": "user", "content": self.user_text})
        return msgs


class Backend(Protocol):
    name: str

    def complete(self, request: ChatRequest) -> str: ...


# -- replay -------------------------------------------------------------------


def read_script(path: str | Path) -> list[str]:
    """Split a replay file into responses on lines that contain only ``---``."""
    responses: list[list[str]] = [[]]
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() == "---":
            responses.append([])
        else:
            responses[-1].append(line)
    texts = ["\n".join(r).strip("\n") for r in responses]
    if texts and not texts[-1]:
        texts.pop()
    return texts


class ReplayBackend:
    """Returns scripted responses in order and records every request."""

    name = "replay"

    def __init__(self, script: Iterable[str]):
        self.script = list(script)
        self.requests: list[ChatRequest] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> ReplayBackend:
        return cls(read_script(path))

    @property
    def remaining(self) -> int:
        return len(self.script) - len(self.requests)

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            position = len(self.requests)
            if position >= len(self.script):
                raise ScriptExhausted(f"replay script has only {len(self.script)} responses")
            self.requests.append(request)
            return self.script[position]


class FunctionBackend:
    """Wraps a plain ``request -> text`` callable, handy for tests and policies."""

    def __init__(self, fn: Callable[[ChatRequest], str], name: str = "function"):
        self.fn = fn
        self.name = name

    def complete(self, request: ChatRequest) -> str:
        return self.fn(request)


# -- HTTP -----------------------------------------------------------------------


@dataclass
class RateLimiter:
    """Spaces request starts so that at most ``rpm`` begin per minute."""

    rpm: float | None
    clock: Callable[[], float] = time.monotonic
    sleep: Callable[[float], None] = time.sleep
    _next: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def acquire(self) -> None:
        if not self.rpm:
            return
        interval = 60.0 / self.rpm
        with self._lock:
            now = self.clock()
            start = max(now, self._next)
            self._next = start + interval
        if start > now:
            self.sleep(start - now)


class HTTPBackend:
    """OpenAI-compatible chat-completions client.

    Transport errors, 429 and 5xx responses are retried with exponential
    backoff and jitter; 401/403 fail immediately.
    """

    name = "http"

    def __init__(
        self,
        endpoint_url: str,
        model_name: str,
        *,
        api_key: str | None = None,
        api_key_env: str = "OPENAI_API_KEY",
        max_retries: int = 5,
        backoff_base: float = 1.0,
        backoff_cap: float = 30.0,
        rpm_limit: float | None = None,
        max_in_flight: int = 4,
        max_requests: int | None = None,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint_url = endpoint_url
        self.model_name = model_name
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env)
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.max_requests = max_requests
        self.requests_sent = 0
        self._sleep = sleep
        self._limiter = RateLimiter(rpm_limit, sleep=sleep)
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))
        self._count_lock = threading.Lock()
        self._rng = random.Random(0)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> HTTPBackend:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def payload(self, request: ChatRequest) -> dict:
        return {
            "model": self.model_name,
            "messages": request.messages(),
            "temperature": request.temperature,
            "top_p": request.top_p,
            "max_tokens": request.max_output_tokens,
        }

    def _reserve(self) -> None:
        with self._count_lock:
            if self.max_requests is not None and self.requests_sent >= self.max_requests:
                raise BudgetExceeded(f"request budget of {self.max_requests} exhausted")
            self.requests_sent += 1

    def _backoff(self, attempt: int) -> float:
        delay = min(self.backoff_cap, self.backoff_base * 2**attempt)
        return delay * (0.5 + self._rng.random() / 2)

    def complete(self, request: ChatRequest) -> str:
        body = self.payload(request)
        last_error = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self._backoff(attempt - 1))
            self._reserve()
            self._limiter.acquire()
            with self._slots:
                try:
                    response = self._client.post(self.endpoint_url, json=body)
                except httpx.TransportError as exc:
                    last_error = f"{type(exc).__name__}: {exc}"
                    continue
            if response.status_code in (401, 403):
                raise AuthError(f"HTTP {response.status_code} from {self.endpoint_url}")
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code >= 400:
                raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
            return _extract_text(response)
        raise TransportError(f"giving up after {self.max_retries + 1} attempts: {last_error}")


def _extract_text(response: httpx.Response) -> str:
    try:
        content = response.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ResponseMalformed(f"no message content in response: {response.text[:200]}") from exc
    if not isinstance(content, str):
        raise ResponseMalformed("message content is not text")
    return content
