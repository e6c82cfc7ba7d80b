"""Answer providers: the deterministic stub and an HTTP chat-completions client.

The evaluator only needs ``complete(request) -> str`` and ``describe()``;
everything else (retries on transport errors, rate limiting, auth) stays
behind that seam so the pipeline is testable without a network.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence, runtime_checkable

import requests

log = logging.getLogger(__name__)


class ProviderError(Exception):
    pass


class MissingApiKeyError(ProviderError):
    pass


@dataclass(frozen=True)
class ProviderRequest:
    prompt: str
    paper_id: str = ""
    item_id: str = ""
    attempt: int = 1
    max_tokens: int = 64


@runtime_checkable
class Provider(Protocol):
    def complete(self, request: ProviderRequest) -> str: ...

    def describe(self) -> str: ...


class RateLimiter:
    """Enforces a minimum interval between calls (thread-safe, monotonic clock)."""

    def __init__(self, min_interval_s: float = 0.0):
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next_at - now
            self._next_at = max(now, self._next_at) + self.min_interval_s
        if delay > 0:
            time.sleep(delay)


@dataclass
class StubProvider:
    """Canned answers keyed by (paper_id, item_id) for tests and dry runs.

    A value may be a single string or a per-attempt sequence (the last entry
    repeats once exhausted). Every request is recorded for assertions.
    """

    answers: Mapping[tuple[str, str], str | Sequence[str]] = field(default_factory=dict)
    default: str = "NA"
    calls: list[ProviderRequest] = field(default_factory=list)

    def complete(self, request: ProviderRequest) -> str:
        self.calls.append(request)
        value = self.answers.get((request.paper_id, request.item_id), self.default)
        if isinstance(value, str):
            return value
        index = min(max(request.attempt, 1), len(value)) - 1
        return value[index]

    def describe(self) -> str:
        return "stub"

    @classmethod
    def from_assessments(cls, assessments: Iterable) -> "StubProvider":
        """Stub that echoes existing assessments, for end-to-end pipeline tests."""
        answers: dict[tuple[str, str], str] = {}
        for assessment in assessments:
            for item_id, ans in assessment.answers.items():
                answers[(assessment.paper_id, item_id)] = ans.value
        return cls(answers=answers)


class OpenAiCompatProvider:
    """Client for any chat-completions endpoint speaking the common JSON shape.

    The API key comes from an environment variable so configuration files can
    be committed without secrets.
    """

    RETRYABLE = (429, 500, 502, 503, 504)

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "REPROCHECK_API_KEY",
        temperature: float = 0.0,
        timeout_s: float = 120.0,
        min_interval_s: float = 0.0,
        transport_retries: int = 3,
        session: requests.Session | None = None,
    ):
        key = os.environ.get(api_key_env, "")
        if not key:
            raise MissingApiKeyError(
                f"environment variable {api_key_env} is empty; "
                "set it to the API key for the provider"
            )
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.timeout_s = timeout_s
        self.transport_retries = transport_retries
        self._limiter = RateLimiter(min_interval_s)
        self._session = session or requests.Session()
        self._session.headers["Authorization"] = f"Bearer {key}"

    def describe(self) -> str:
        return f"{self.model} @ {self.base_url}"

    def complete(self, request: ProviderRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.temperature,
            "max_tokens": request.max_tokens,
        }
        url = f"{self.base_url}/chat/completions"
        last_error = "no attempt made"
        for retry in range(self.transport_retries + 1):
            self._limiter.wait()
            try:
                resp = self._session.post(url, json=payload, timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = str(exc)
                log.warning("provider transport error (try %d): %s", retry + 1, exc)
                time.sleep(min(2.0 * (retry + 1), 10.0))
                continue
            if resp.status_code in self.RETRYABLE:
                last_error = f"http status {resp.status_code}"
                wait = resp.headers.get("Retry-After")
                try:
                    delay = float(wait) if wait else 2.0 * (retry + 1)
                except ValueError:
                    delay = 2.0 * (retry + 1)
                time.sleep(min(delay, 30.0))
                continue
            if resp.status_code != 200:
                raise ProviderError(
                    f"provider returned {resp.status_code}: {resp.text[:300]}"
                )
            return self._extract_content(resp)
        raise ProviderError(f"provider unreachable after retries: {last_error}")

    @staticmethod
    def _extract_content(resp: requests.Response) -> str:
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, requests.exceptions.JSONDecodeError,
                KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc
        if not isinstance(content, str):
            raise ProviderError("provider response content is not text")
        return content
