"""Text-generation backends behind one ``complete()`` interface.

Two backends ship: an OpenAI-compatible chat-completions HTTP client with
bounded retries, and a deterministic scripted backend for tests and offline
replays.  Both are safe to share between threads.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .core import DecodingParams, TokenCounts
from .errors import ScriptExhausted, TransportError

VALID_ROLES = ("system", "user", "assistant")

DEFAULT_TIMEOUT = 120.0
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_MAX_CONCURRENCY = 4
RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in VALID_ROLES:
            raise ValueError(f"role must be one of {VALID_ROLES}, got {self.role!r}")

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")

    @property
    def counts(self) -> TokenCounts:
        return TokenCounts(self.prompt_tokens, self.completion_tokens)


def _check_request(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    if messages[-1].role != "user":
        raise ValueError("last message must have role=user")


class LlmClient(Protocol):
    def complete(self, messages: Sequence[ChatMessage],
                 params: DecodingParams) -> Completion: ...


class ScriptedClient:
    """Replays a fixed list of responses in order.

    Token counts are whitespace token counts of the request and response.
    A lock makes the consumption order total under concurrent callers, and
    ``calls`` records every request for call-order assertions in tests.
    """

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._cursor = 0
        self._lock = threading.Lock()
        self.calls: list[list[ChatMessage]] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedClient":
        """Load a JSON array of response strings."""
        with open(path, encoding="utf-8") as f:
            responses = json.load(f)
        if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
            raise ValueError(f"{path}: script file must be a JSON array of strings")
        return cls(responses)

    @property
    def remaining(self) -> int:
        with self._lock:
            return len(self._responses) - self._cursor

    def complete(self, messages: Sequence[ChatMessage],
                 params: DecodingParams) -> Completion:
        _check_request(messages)
        with self._lock:
            if self._cursor >= len(self._responses):
                raise ScriptExhausted(
                    f"script exhausted after {self._cursor} responses")
            text = self._responses[self._cursor]
            self._cursor += 1
            self.calls.append(list(messages))
        prompt_tokens = sum(len(m.content.split()) for m in messages)
        return Completion(text=text, prompt_tokens=prompt_tokens,
                          completion_tokens=len(text.split()))


class OpenAIChatClient:
    """Chat-completions client for any OpenAI-compatible endpoint.

    Retries 5xx/429/timeouts with exponential backoff; a semaphore caps
    concurrent in-flight requests.
    """

    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 api_key_env: str = "OPENAI_API_KEY",
                 timeout: float = DEFAULT_TIMEOUT,
                 max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                 max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
                 backoff_base: float = 0.5):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env, "")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._slots = threading.Semaphore(max_concurrency)
        self._session = requests.Session()

    def complete(self, messages: Sequence[ChatMessage],
                 params: DecodingParams) -> Completion:
        _check_request(messages)
        payload = {
            "model": self.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        with self._slots:
            for attempt in range(self.max_attempts):
                if attempt:
                    time.sleep(self.backoff_base * (2 ** (attempt - 1)))
                try:
                    resp = self._session.post(
                        f"{self.base_url}/chat/completions",
                        json=payload, headers=headers, timeout=self.timeout)
                except requests.RequestException as exc:
                    last_error = exc
                    continue
                if resp.status_code in RETRYABLE_STATUS:
                    last_error = TransportError(
                        f"HTTP {resp.status_code} from {self.base_url}")
                    continue
                if resp.status_code != 200:
                    raise TransportError(
                        f"HTTP {resp.status_code} from {self.base_url}: {resp.text[:200]}")
                return self._parse_response(resp)
        raise TransportError(
            f"request failed after {self.max_attempts} attempts: {last_error}")

    @staticmethod
    def _parse_response(resp: requests.Response) -> Completion:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unusable completion payload: {exc}") from exc
        usage = data.get("usage") or {}
        return Completion(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


class RecordingClient:
    """Wraps a client, accumulating call and token counts.

    The pipeline uses one per trajectory to split usage by hop.
    """

    def __init__(self, inner: LlmClient):
        self._inner = inner
        self._lock = threading.Lock()
        self.calls = 0
        self.totals = TokenCounts()

    def complete(self, messages: Sequence[ChatMessage],
                 params: DecodingParams) -> Completion:
        completion = self._inner.complete(messages, params)
        with self._lock:
            self.calls += 1
            self.totals = self.totals + completion.counts
        return completion

    def snapshot(self) -> TokenCounts:
        with self._lock:
            return self.totals
