"""Chat-completion backends: a remote HTTP client and a scripted stand-in."""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence


class BackendError(Exception):
    pass


class BackendTimeout(BackendError):
    pass


class BackendRefused(BackendError):
    pass


class NoApiKey(BackendError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} message must have content")


def _check_messages(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    if messages[-1].role != "user":
        raise ValueError("conversation must end with a user message")


class ChatBackend(Protocol):
    def complete(self, messages: Sequence[ChatMessage], timeout_ms: int = 30_000) -> str: ...


@dataclass(frozen=True)
class ScriptedRule:
    match: str
    reply: str
    regex: bool = False

    def applies(self, text: str) -> bool:
        if self.regex:
            return re.search(self.match, text) is not None
        return self.match in text


@dataclass(frozen=True)
class ScriptedBackend:
    """Deterministic backend: first rule matching the last user message wins."""

    rules: tuple[ScriptedRule, ...] = ()
    default_reply: str = ""

    def complete(self, messages: Sequence[ChatMessage], timeout_ms: int = 30_000) -> str:
        _check_messages(messages)
        last_user = messages[-1].content
        for rule in self.rules:
            if rule.applies(last_user):
                return rule.reply
        return self.default_reply


def load_scripted_backend(path: str) -> ScriptedBackend:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    rules = tuple(
        ScriptedRule(
            match=r["match"],
            reply=r["reply"],
            regex=bool(r.get("regex", False)),
        )
        for r in data.get("rules", [])
    )
    return ScriptedBackend(rules=rules, default_reply=data.get("default_reply", ""))


_RETRYABLE_STATUS = {429, 500, 502, 503, 504}
_MAX_RETRIES = 3
_MAX_ATTEMPTS = _MAX_RETRIES + 1


@dataclass
class HttpBackend:
    """Remote chat-completion endpoint speaking the de-facto JSON shape.

    Messages go out verbatim; the first choice's message content comes back.
    Transient transport failures are retried up to 3 times with exponential
    backoff; non-retryable HTTP statuses raise BackendRefused immediately.
    """

    url: str = ""
    api_key: str = ""
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    max_in_flight: int = 4
    backoff_base_s: float = 0.5
    _gate: threading.Semaphore = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.url = self.url or os.environ.get("UI_MINER_LLM_URL", "")
        self.api_key = self.api_key or os.environ.get("UI_MINER_LLM_KEY", "")
        if not self.url:
            raise BackendRefused("no chat-completion URL configured")
        if not self.api_key:
            raise NoApiKey("remote backend selected without credentials")
        self._gate = threading.Semaphore(self.max_in_flight)

    def complete(self, messages: Sequence[ChatMessage], timeout_ms: int = 30_000) -> str:
        import requests

        _check_messages(messages)
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error: Exception | None = None
        with self._gate:
            for attempt in range(_MAX_ATTEMPTS):
                if attempt:
                    time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
                try:
                    resp = requests.post(
                        self.url, json=body, headers=headers, timeout=timeout_ms / 1000.0
                    )
                except requests.Timeout as exc:
                    last_error = exc
                    continue
                except requests.RequestException as exc:
                    last_error = exc
                    continue
                if resp.status_code in _RETRYABLE_STATUS:
                    last_error = BackendRefused(f"HTTP {resp.status_code}")
                    continue
                if resp.status_code != 200:
                    raise BackendRefused(f"HTTP {resp.status_code}: {resp.text[:200]}")
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise BackendRefused(f"malformed completion response: {exc}") from exc
        if isinstance(last_error, BackendRefused):
            raise BackendRefused(f"gave up after {_MAX_ATTEMPTS} attempts: {last_error}")
        raise BackendTimeout(f"gave up after {_MAX_ATTEMPTS} attempts: {last_error}")
