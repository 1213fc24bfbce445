"""LLM gateway: an OpenAI-style chat-completions HTTP backend plus a scripted mock."""
from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

import requests

from .errors import CompletionTimeout, MalformedResponse, ScriptExhausted, TransportError
from .prompts import ChatMessage

log = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-3.5-turbo"
DEFAULT_TEMPERATURE = 0.2
DEFAULT_TIMEOUT_MS = 60_000


@dataclass
class CompletionRequest:
    messages: tuple[ChatMessage, ...]
    model: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    timeout_ms: int = DEFAULT_TIMEOUT_MS


def digest_messages(messages) -> str:
    """Stable identity of a message array: sha256 over role:content lines."""
    joined = "\n".join(f"{m.role}:{m.content}" for m in messages)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


class HttpBackend:
    """POSTs to {base_url}/chat/completions and returns the first choice's content."""

    def __init__(self, base_url: str, api_key: str = ""):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key

    def _once(self, request: CompletionRequest) -> str:
        payload = {
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=request.timeout_ms / 1000,
            )
        except requests.Timeout as exc:
            raise CompletionTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise TransportError(None, str(exc)) from exc
        if not 200 <= response.status_code < 300:
            raise TransportError(response.status_code, response.text)
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(str(exc)) from exc
        if not isinstance(content, str):
            raise MalformedResponse(f"content is {type(content).__name__}")
        return content

    def complete(self, request: CompletionRequest) -> str:
        try:
            return self._once(request)
        except TransportError as exc:
            log.warning("transport error, retrying once: %s", exc)
            return self._once(request)


@dataclass
class MockEntry:
    reply: str
    match: str | None = None  # digest hex; None matches any request


@dataclass
class MockScript:
    entries: list[MockEntry] = field(default_factory=list)

    @classmethod
    def from_obj(cls, obj: list | dict) -> MockScript:
        entries = obj["entries"] if isinstance(obj, dict) else obj
        return cls([MockEntry(reply=e["reply"], match=e.get("match")) for e in entries])

    @classmethod
    def from_json(cls, text: str) -> MockScript:
        return cls.from_obj(json.loads(text))


class MockBackend:
    """Deterministic backend: digest-keyed entries match anywhere, Any entries in order."""

    def __init__(self, script: MockScript):
        self._entries = list(script.entries)

    def remaining(self) -> int:
        return len(self._entries)

    def complete(self, request: CompletionRequest) -> str:
        digest = digest_messages(request.messages)
        for i, entry in enumerate(self._entries):
            if entry.match == digest:
                return self._entries.pop(i).reply
        for i, entry in enumerate(self._entries):
            if entry.match is None:
                return self._entries.pop(i).reply
        raise ScriptExhausted(f"no scripted reply for digest {digest[:12]}")


class LlmClient:
    """Facade the engine talks to; records every call for export, goldens, and replay."""

    def __init__(
        self,
        backend,
        model: str = DEFAULT_MODEL,
        temperature: float = DEFAULT_TEMPERATURE,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
    ):
        self.backend = backend
        self.model = model
        self.temperature = temperature
        self.timeout_ms = timeout_ms
        self.trace: list[dict] = []

    def complete(self, messages, purpose: str) -> str:
        request = CompletionRequest(
            messages=tuple(messages),
            model=self.model,
            temperature=self.temperature,
            timeout_ms=self.timeout_ms,
        )
        reply = self.backend.complete(request)
        self.trace.append(
            {
                "purpose": purpose,
                "digest": digest_messages(messages),
                "messages": [{"role": m.role, "content": m.content} for m in messages],
                "reply": reply,
            }
        )
        return reply


def backend_from_env() -> HttpBackend:
    base_url = os.environ.get("LLM_BASE_URL", "")
    if not base_url:
        raise TransportError(None, "LLM_BASE_URL is not set")
    return HttpBackend(base_url=base_url, api_key=os.environ.get("LLM_API_KEY", ""))


def model_from_env() -> str:
    return os.environ.get("LLM_MODEL", DEFAULT_MODEL)
